#include "prefbo/serialize.hpp"

#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace prefbo {

namespace {

using nlohmann::json;

std::string phase_name(RunPhase phase) {
  switch (phase) {
    case RunPhase::InitialDesign:
      return "initial_design";
    case RunPhase::ParEGOLoop:
      return "parego_loop";
    case RunPhase::AwaitingElicitation:
      return "awaiting_elicitation";
    case RunPhase::FocusedPhase:
      return "focused_phase";
    case RunPhase::Done:
      return "done";
  }
  throw std::logic_error("phase_name: unhandled phase");
}

RunPhase phase_from_name(const std::string& name) {
  if (name == "initial_design") return RunPhase::InitialDesign;
  if (name == "parego_loop") return RunPhase::ParEGOLoop;
  if (name == "awaiting_elicitation") return RunPhase::AwaitingElicitation;
  if (name == "focused_phase") return RunPhase::FocusedPhase;
  if (name == "done") return RunPhase::Done;
  throw std::invalid_argument("unknown run phase '" + name + "'");
}

json config_to_json(const RunConfig& c) {
  return json{{"problem", c.problem},
              {"budget", c.budget},
              {"elicit_steps", c.elicit_steps},
              {"initial_design", c.initial_design},
              {"rho", c.rho},
              {"seed", c.seed},
              {"nsga",
               {{"population_size", c.nsga.population_size},
                {"generations", c.nsga.generations},
                {"crossover_rate", c.nsga.crossover_rate},
                {"crossover_eta", c.nsga.crossover_eta},
                {"mutation_eta", c.nsga.mutation_eta},
                {"mutation_rate", c.nsga.mutation_rate}}}};
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.problem = j.at("problem").get<std::string>();
  c.budget = j.at("budget").get<int>();
  c.elicit_steps = j.at("elicit_steps").get<int>();
  c.initial_design = j.at("initial_design").get<int>();
  c.rho = j.at("rho").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  const json& n = j.at("nsga");
  c.nsga.population_size = n.at("population_size").get<int>();
  c.nsga.generations = n.at("generations").get<int>();
  c.nsga.crossover_rate = n.at("crossover_rate").get<double>();
  c.nsga.crossover_eta = n.at("crossover_eta").get<double>();
  c.nsga.mutation_eta = n.at("mutation_eta").get<double>();
  c.nsga.mutation_rate = n.at("mutation_rate").get<double>();
  return c;
}

json history_to_json(const std::vector<Sample>& history) {
  json arr = json::array();
  for (const Sample& s : history) {
    arr.push_back(json{{"x", s.x}, {"y", s.y}});
  }
  return arr;
}

std::vector<Sample> history_from_json(const json& arr) {
  std::vector<Sample> history;
  history.reserve(arr.size());
  for (const json& j : arr) {
    history.push_back({j.at("x").get<DesignPoint>(),
                       j.at("y").get<ObjectiveVector>()});
  }
  return history;
}

json front_to_json(const FrontApproximation& front) {
  json members = json::array();
  for (const Individual& ind : front.members) {
    members.push_back(
        json{{"design", ind.design}, {"objectives", ind.objectives}});
  }
  return json{{"members", std::move(members)},
              {"generations", front.generations},
              {"population_size", front.population_size},
              {"evaluator_label", front.evaluator_label}};
}

FrontApproximation front_from_json(const json& j) {
  FrontApproximation front;
  front.generations = j.at("generations").get<int>();
  front.population_size = j.at("population_size").get<int>();
  front.evaluator_label = j.at("evaluator_label").get<std::string>();
  for (const json& m : j.at("members")) {
    Individual ind;
    ind.design = m.at("design").get<DesignPoint>();
    ind.objectives = m.at("objectives").get<ObjectiveVector>();
    front.members.push_back(std::move(ind));
  }
  return front;
}

json elicitation_to_json(const ElicitationRecord& rec) {
  json j{{"iteration", rec.iteration}, {"front", front_to_json(rec.front)}};
  if (rec.picked_index.has_value()) {
    j["picked_index"] = *rec.picked_index;
    j["picked_predicted"] = rec.picked_predicted;
    j["theta_hat"] = rec.theta_hat;
  } else {
    j["picked_index"] = nullptr;
  }
  return j;
}

ElicitationRecord elicitation_from_json(const json& j) {
  ElicitationRecord rec;
  rec.iteration = j.at("iteration").get<int>();
  rec.front = front_from_json(j.at("front"));
  if (j.contains("picked_index") && !j.at("picked_index").is_null()) {
    rec.picked_index = j.at("picked_index").get<std::size_t>();
    rec.picked_predicted = j.at("picked_predicted").get<ObjectiveVector>();
    rec.theta_hat = j.at("theta_hat").get<Theta>();
  }
  return rec;
}

std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string run_result_to_json(const RunResult& result, int indent) {
  json j{{"config", config_to_json(result.config)},
         {"history", history_to_json(result.history)},
         {"pareto_indices", result.pareto_indices},
         {"duplicate_fallbacks", result.duplicate_fallbacks},
         {"failed", result.failed},
         {"phase", phase_name(result.phase)},
         {"error", result.error}};
  j["elicitation"] = result.elicitation.has_value()
                         ? elicitation_to_json(*result.elicitation)
                         : json(nullptr);
  j["picked_index"] = result.picked_index.has_value()
                          ? json(*result.picked_index)
                          : json(nullptr);
  j["picked_utility"] = result.picked_utility.has_value()
                            ? json(*result.picked_utility)
                            : json(nullptr);
  j["opportunity_cost"] = result.opportunity_cost.has_value()
                              ? json(*result.opportunity_cost)
                              : json(nullptr);
  return j.dump(indent);
}

std::string run_state_to_json(const RunState& state, int indent) {
  json j{{"config", config_to_json(state.config)},
         {"history", history_to_json(state.history)},
         {"phase", phase_name(state.phase)},
         {"duplicate_fallbacks", state.duplicate_fallbacks}};
  j["elicitation"] = state.elicitation.has_value()
                         ? elicitation_to_json(*state.elicitation)
                         : json(nullptr);
  return j.dump(indent);
}

RunState run_state_from_json(const std::string& text) {
  const json j = json::parse(text);
  RunState state;
  state.config = config_from_json(j.at("config"));
  state.history = history_from_json(j.at("history"));
  state.phase = phase_from_name(j.at("phase").get<std::string>());
  state.duplicate_fallbacks = j.at("duplicate_fallbacks").get<int>();
  if (j.contains("elicitation") && !j.at("elicitation").is_null()) {
    state.elicitation = elicitation_from_json(j.at("elicitation"));
  }
  return state;
}

std::string history_to_csv(const RunResult& result) {
  const int dim =
      result.history.empty() ? 0 : static_cast<int>(result.history[0].x.size());
  const int k =
      result.history.empty() ? 0 : static_cast<int>(result.history[0].y.size());
  std::string out = "iter";
  for (int d = 1; d <= dim; ++d) out += ",x_" + std::to_string(d);
  for (int j = 1; j <= k; ++j) out += ",f_" + std::to_string(j);
  out += ",phase";
  for (int j = 1; j <= k; ++j) out += ",theta_" + std::to_string(j);
  out += "\n";

  const int n0 = result.config.initial_design;
  const int focused_from =
      result.config.budget - result.config.elicit_steps;
  const bool have_theta = result.elicitation.has_value() &&
                          result.elicitation->picked_index.has_value();
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    const Sample& s = result.history[i];
    out += std::to_string(i);
    for (double v : s.x) out += "," + format_g9(v);
    for (double v : s.y) out += "," + format_g9(v);
    const int iter = static_cast<int>(i);
    const bool focused = iter >= focused_from;
    if (iter < n0) {
      out += ",initial";
    } else if (focused) {
      out += ",focused";
    } else {
      out += ",parego";
    }
    for (int j = 0; j < k; ++j) {
      out += ",";
      if (focused && have_theta) {
        out += format_g9(result.elicitation->theta_hat[j]);
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace prefbo
