#include "prefbo/service.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "prefbo/dm.hpp"
#include "prefbo/engine.hpp"
#include "prefbo/serialize.hpp"

namespace prefbo {

namespace {

using nlohmann::json;

std::string now_iso() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const char* phase_name(RunPhase phase) {
  switch (phase) {
    case RunPhase::InitialDesign: return "initial_design";
    case RunPhase::ParEGOLoop: return "parego_loop";
    case RunPhase::AwaitingElicitation: return "awaiting_elicitation";
    case RunPhase::FocusedPhase: return "focused_phase";
    case RunPhase::Done: return "done";
  }
  return "unknown";
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& msg) {
  send_json(res, status, json{{"error", msg}});
}

void write_file_atomically(const std::filesystem::path& path,
                           const std::string& body) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write " + tmp.string());
    }
    out << body;
  }
  std::filesystem::rename(tmp, path);
}

/// One run and its transport state. The worker thread owns the engine;
/// handlers read the snapshot (refreshed by the progress callback) and
/// the finished document under the session mutex.
struct Session {
  std::string id;
  InteractiveDM dm;
  std::thread worker;
  mutable std::mutex mu;
  RunState snapshot;
  json result_doc;  // null until the run finished or failed
  std::string created_at;
  std::string updated_at;
};

}  // namespace

struct Service::Impl {
  explicit Impl(ServiceOptions opts) : options(std::move(opts)) {
    std::random_device rd;
    id_rng.seed((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
    routes();
  }

  ServiceOptions options;

  httplib::Server server;
  std::thread listener;
  int bound_port = 0;
  std::atomic<bool> stopped{false};

  std::mutex sessions_mu;
  std::map<std::string, std::unique_ptr<Session>> sessions;
  std::map<std::string, std::string> idempotency;
  std::mt19937_64 id_rng;

  bool persistent() const { return !options.state_dir.empty(); }

  std::filesystem::path state_path(const std::string& id) const {
    return options.state_dir / (id + ".state.json");
  }
  std::filesystem::path result_path(const std::string& id) const {
    return options.state_dir / (id + ".result.json");
  }

  std::string fresh_id() {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(id_rng()));
    return buf;
  }

  Session* find(const std::string& id) {
    std::lock_guard lock(sessions_mu);
    const auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second.get();
  }

  static std::string status_of(const Session& s) {  // callers hold s.mu
    if (!s.result_doc.is_null()) {
      return s.result_doc.at("failed").get<bool>() ? "Failed" : "Finished";
    }
    if (s.snapshot.phase == RunPhase::AwaitingElicitation) {
      return "AwaitingPick";
    }
    return "Running";
  }

  void persist_snapshot(const Session& s, const RunState& state) {
    if (!persistent()) return;
    write_file_atomically(state_path(s.id), run_state_to_json(state));
  }

  void finish_session(Session& s, json doc) {
    {
      std::lock_guard lock(s.mu);
      s.result_doc = std::move(doc);
      s.updated_at = now_iso();
    }
    if (persistent()) {
      std::lock_guard lock(s.mu);
      write_file_atomically(result_path(s.id), s.result_doc.dump());
      std::error_code ec;
      std::filesystem::remove(state_path(s.id), ec);
    }
  }

  static json build_result_doc(const RunResult& result) {
    json doc = json::parse(run_result_to_json(result, -1));
    if (!result.failed) {
      json gamma = json::array();
      for (std::size_t idx : result.pareto_indices) {
        json member{{"index", idx},
                    {"design", result.history[idx].x},
                    {"objectives", result.history[idx].y}};
        if (result.elicitation.has_value() &&
            result.elicitation->picked_index.has_value()) {
          member["dominates_pick"] = dominates(
              result.history[idx].y, result.elicitation->picked_predicted);
        }
        gamma.push_back(std::move(member));
      }
      doc["gamma"] = std::move(gamma);
    }
    return doc;
  }

  /// Worker body. Exactly one of config/state is meaningful; failures of
  /// any kind end up in the result document, except a cancellation, which
  /// leaves the session unfinished so the snapshot survives on disk.
  void run_session(Session* s, std::optional<RunConfig> config,
                   std::optional<RunState> state) {
    ProgressFn progress = [this, s](const RunState& st) {
      {
        std::lock_guard lock(s->mu);
        s->snapshot = st;
        s->updated_at = now_iso();
      }
      persist_snapshot(*s, st);
    };
    try {
      RunResult result =
          config.has_value()
              ? Engine::run(*config, s->dm, nullptr, progress)
              : Engine::resume(std::move(*state), s->dm, nullptr, progress);
      finish_session(*s, build_result_doc(result));
    } catch (const RunCancelled&) {
    } catch (const std::exception& e) {
      json doc{{"failed", true}, {"error", e.what()}, {"phase", "unknown"}};
      finish_session(*s, std::move(doc));
    }
  }

  Session* create_session(const std::string& id,
                          std::optional<RunConfig> config,
                          std::optional<RunState> state) {
    auto owned = std::make_unique<Session>();
    Session* s = owned.get();
    s->id = id;
    s->created_at = now_iso();
    s->updated_at = s->created_at;
    if (config.has_value()) {
      s->snapshot.config = *config;
    } else {
      s->snapshot = *state;
    }
    sessions.emplace(id, std::move(owned));
    s->worker = std::thread([this, s, config = std::move(config),
                             state = std::move(state)]() mutable {
      run_session(s, std::move(config), std::move(state));
    });
    return s;
  }

  /// Finished sessions come back as served documents; unfinished ones
  /// resume their runs (a parked elicitation re-parks on the recorded
  /// front without recomputing it).
  void restore_sessions() {
    if (!persistent()) return;
    std::filesystem::create_directories(options.state_dir);
    std::vector<std::filesystem::path> entries;
    for (const auto& entry :
         std::filesystem::directory_iterator(options.state_dir)) {
      entries.push_back(entry.path());
    }
    std::sort(entries.begin(), entries.end());

    std::lock_guard lock(sessions_mu);
    for (const auto& path : entries) {
      const std::string name = path.filename().string();
      const auto read_all = [&path] {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
      };
      if (name.size() > 12 && name.ends_with(".result.json")) {
        const std::string id = name.substr(0, name.size() - 12);
        auto owned = std::make_unique<Session>();
        owned->id = id;
        owned->created_at = now_iso();
        owned->updated_at = owned->created_at;
        owned->result_doc = json::parse(read_all());
        sessions.emplace(id, std::move(owned));
      } else if (name.size() > 11 && name.ends_with(".state.json")) {
        const std::string id = name.substr(0, name.size() - 11);
        if (std::filesystem::exists(result_path(id))) continue;
        create_session(id, std::nullopt, run_state_from_json(read_all()));
      }
    }
  }

  void handle_create(const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = req.body.empty() ? json::object() : json::parse(req.body);
    } catch (const json::exception& e) {
      return send_error(res, 400, std::string("invalid JSON: ") + e.what());
    }
    if (!body.is_object()) {
      return send_error(res, 400, "payload must be a JSON object");
    }

    json fields = json::object();
    static const char* known[] = {"problem",        "budget",
                                  "p",              "elicit_steps",
                                  "initial_design", "rho",
                                  "seed",           "nsga",
                                  "idempotency_key"};
    for (const auto& [key, value] : body.items()) {
      if (std::find_if(std::begin(known), std::end(known),
                       [&key](const char* k) { return key == k; }) ==
          std::end(known)) {
        fields[key] = "unknown field";
      }
    }

    RunConfig config;
    config.nsga = options.nsga;
    const auto take_int = [&](const char* name, int& out) {
      if (!body.contains(name)) return;
      if (!body[name].is_number_integer()) {
        fields[name] = "must be an integer";
        return;
      }
      out = body[name].get<int>();
    };
    if (body.contains("problem")) {
      if (body["problem"].is_string()) {
        config.problem = body["problem"].get<std::string>();
      } else {
        fields["problem"] = "must be a string";
      }
    }
    take_int("budget", config.budget);
    take_int("elicit_steps", config.elicit_steps);
    take_int("p", config.elicit_steps);
    take_int("initial_design", config.initial_design);
    if (body.contains("rho")) {
      if (body["rho"].is_number()) {
        config.rho = body["rho"].get<double>();
      } else {
        fields["rho"] = "must be a number";
      }
    }
    if (body.contains("seed")) {
      if (body["seed"].is_number_unsigned() ||
          (body["seed"].is_number_integer() &&
           body["seed"].get<std::int64_t>() >= 0)) {
        config.seed = body["seed"].get<std::uint64_t>();
      } else {
        fields["seed"] = "must be a nonnegative integer";
      }
    }
    if (body.contains("nsga")) {
      if (body["nsga"].is_object()) {
        const json& n = body["nsga"];
        const auto take_nsga_int = [&](const char* name, int& out) {
          if (!n.contains(name)) return;
          if (!n[name].is_number_integer()) {
            fields["nsga"] = std::string(name) + " must be an integer";
            return;
          }
          out = n[name].get<int>();
        };
        take_nsga_int("population_size", config.nsga.population_size);
        take_nsga_int("generations", config.nsga.generations);
        if (!fields.contains("nsga")) {
          if (config.nsga.population_size < 4 ||
              config.nsga.population_size % 2 != 0) {
            fields["nsga"] = "population_size must be even and at least 4";
          } else if (config.nsga.generations < 0) {
            fields["nsga"] = "generations must be >= 0";
          }
        }
      } else {
        fields["nsga"] = "must be an object";
      }
    }

    const ProblemSpec* problem = nullptr;
    ProblemSpec problem_storage;
    if (!fields.contains("problem")) {
      try {
        problem_storage = lookup_problem(config.problem);
        problem = &problem_storage;
      } catch (const std::exception& e) {
        fields["problem"] = e.what();
      }
    }
    if (!fields.contains("budget") && config.budget <= 0) {
      fields["budget"] = "must be positive";
    }
    if (!fields.contains("p") && config.elicit_steps < 0) {
      fields["p"] = "must be >= 0";
    }
    if (problem != nullptr && !fields.contains("initial_design") &&
        config.initial_design < problem->dim + 1) {
      fields["initial_design"] = "must have at least D + 1 points";
    }
    if (!fields.contains("budget") && !fields.contains("p") &&
        config.budget > 0 &&
        config.elicit_steps >= config.budget - config.initial_design) {
      fields["p"] = "p must be smaller than remaining budget";
    }
    if (!fields.contains("rho") && !(config.rho > 0.0)) {
      fields["rho"] = "must be positive";
    }
    std::string idem_key;
    if (body.contains("idempotency_key")) {
      if (body["idempotency_key"].is_string()) {
        idem_key = body["idempotency_key"].get<std::string>();
      } else {
        fields["idempotency_key"] = "must be a string";
      }
    }
    if (!fields.empty()) {
      return send_json(res, 400,
                       json{{"error", "invalid config"}, {"fields", fields}});
    }

    std::lock_guard lock(sessions_mu);
    if (!idem_key.empty()) {
      const auto it = idempotency.find(idem_key);
      if (it != idempotency.end()) {
        Session* s = sessions.at(it->second).get();
        std::lock_guard slock(s->mu);
        return send_json(res, 200,
                         json{{"id", s->id}, {"status", status_of(*s)}});
      }
    }
    std::string id = fresh_id();
    while (sessions.count(id) != 0) id = fresh_id();
    Session* s = create_session(id, config, std::nullopt);
    if (!idem_key.empty()) idempotency[idem_key] = id;
    send_json(res, 201, json{{"id", id}, {"status", "Running"}});
  }

  void handle_get_session(const httplib::Request& req,
                          httplib::Response& res) {
    Session* s = find(req.path_params.at("id"));
    if (s == nullptr) return send_error(res, 404, "unknown session");
    std::lock_guard lock(s->mu);
    json out{{"id", s->id},
             {"status", status_of(*s)},
             {"created_at", s->created_at},
             {"updated_at", s->updated_at}};
    if (!s->result_doc.is_null()) {
      if (s->result_doc.contains("config")) {
        const json& c = s->result_doc["config"];
        out["problem"] = c["problem"];
        out["budget"] = c["budget"];
        out["elicit_steps"] = c["elicit_steps"];
      }
      if (s->result_doc.contains("history")) {
        out["iteration"] = s->result_doc["history"].size();
      }
      out["phase"] = s->result_doc.value("phase", "done");
    } else {
      out["problem"] = s->snapshot.config.problem;
      out["budget"] = s->snapshot.config.budget;
      out["elicit_steps"] = s->snapshot.config.elicit_steps;
      out["iteration"] = s->snapshot.history.size();
      out["phase"] = phase_name(s->snapshot.phase);
    }
    send_json(res, 200, out);
  }

  void handle_get_front(const httplib::Request& req, httplib::Response& res) {
    Session* s = find(req.path_params.at("id"));
    if (s == nullptr) return send_error(res, 404, "unknown session");
    const std::string reveal = req.get_param_value("include_designs");
    const bool include_designs = reveal == "1" || reveal == "true";

    std::lock_guard lock(s->mu);
    const std::string status = status_of(*s);
    if (status != "AwaitingPick") {
      return send_json(
          res, 409,
          json{{"error", "session is not awaiting a pick"},
               {"status", status}});
    }
    const ElicitationRecord& rec = *s->snapshot.elicitation;
    json front = json::array();
    for (std::size_t i = 0; i < rec.front.members.size(); ++i) {
      json member{{"index", i},
                  {"objectives", rec.front.members[i].objectives}};
      if (include_designs) {
        member["design"] = rec.front.members[i].design;
      }
      front.push_back(std::move(member));
    }
    json history = json::array();
    for (const Sample& sample : s->snapshot.history) {
      json point{{"objectives", sample.y}};
      if (include_designs) point["design"] = sample.x;
      history.push_back(std::move(point));
    }
    send_json(res, 200,
              json{{"iteration", rec.iteration},
                   {"front", std::move(front)},
                   {"history", std::move(history)}});
  }

  void handle_pick(const httplib::Request& req, httplib::Response& res) {
    Session* s = find(req.path_params.at("id"));
    if (s == nullptr) return send_error(res, 404, "unknown session");
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      return send_error(res, 400, std::string("invalid JSON: ") + e.what());
    }
    if (!body.is_object() || !body.contains("index") ||
        !body["index"].is_number_integer() ||
        body["index"].get<std::int64_t>() < 0) {
      return send_error(res, 400, "index must be a nonnegative integer");
    }
    const auto index = body["index"].get<std::size_t>();

    // The run publishes AwaitingPick just before parking, so a pick can
    // arrive in the gap; NotAwaiting retries briefly while the snapshot
    // still claims the session is waiting.
    for (int attempt = 0; attempt < 200; ++attempt) {
      switch (s->dm.deliver_pick(index)) {
        case PickDelivery::Delivered:
          {
            std::lock_guard lock(s->mu);
            s->updated_at = now_iso();
          }
          return send_json(res, 200,
                           json{{"status", "Running"}, {"index", index}});
        case PickDelivery::AlreadyPicked:
          return send_error(res, 409, "pick already delivered");
        case PickDelivery::OutOfRange:
          return send_error(res, 422, "index outside the front");
        case PickDelivery::NotAwaiting:
          {
            std::lock_guard lock(s->mu);
            if (status_of(*s) != "AwaitingPick") {
              return send_error(res, 409, "session is not awaiting a pick");
            }
          }
          std::this_thread::sleep_for(std::chrono::milliseconds(10));
          break;
      }
    }
    send_error(res, 409, "session is not awaiting a pick");
  }

  void handle_get_result(const httplib::Request& req,
                         httplib::Response& res) {
    Session* s = find(req.path_params.at("id"));
    if (s == nullptr) return send_error(res, 404, "unknown session");
    std::lock_guard lock(s->mu);
    const std::string status = status_of(*s);
    if (status == "Finished") {
      json out = s->result_doc;
      out["status"] = "Finished";
      out["id"] = s->id;
      return send_json(res, 200, out);
    }
    if (status == "Failed") {
      return send_json(res, 200,
                       json{{"id", s->id},
                            {"status", "Failed"},
                            {"phase", s->result_doc.value("phase", "")},
                            {"message", s->result_doc.value("error", "")}});
    }
    send_json(res, 200,
              json{{"id", s->id},
                   {"status", status},
                   {"iteration", s->snapshot.history.size()}});
  }

  void routes() {
    server.Post("/sessions", [this](const httplib::Request& req,
                                    httplib::Response& res) {
      handle_create(req, res);
    });
    server.Get("/sessions/:id", [this](const httplib::Request& req,
                                       httplib::Response& res) {
      handle_get_session(req, res);
    });
    server.Get("/sessions/:id/front", [this](const httplib::Request& req,
                                             httplib::Response& res) {
      handle_get_front(req, res);
    });
    server.Post("/sessions/:id/pick", [this](const httplib::Request& req,
                                             httplib::Response& res) {
      handle_pick(req, res);
    });
    server.Get("/sessions/:id/result", [this](const httplib::Request& req,
                                              httplib::Response& res) {
      handle_get_result(req, res);
    });
  }

  void shutdown() {
    if (stopped.exchange(true)) return;
    server.stop();
    if (listener.joinable()) listener.join();
    std::lock_guard lock(sessions_mu);
    for (auto& [id, s] : sessions) {
      s->dm.cancel();
      if (s->worker.joinable()) s->worker.join();
    }
  }
};

Service::Service(ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() { impl_->shutdown(); }

void Service::run() {
  impl_->restore_sessions();
  impl_->bound_port = impl_->options.port;
  if (!impl_->server.listen(impl_->options.host, impl_->options.port)) {
    throw std::runtime_error("cannot listen on " + impl_->options.host + ":" +
                             std::to_string(impl_->options.port));
  }
}

void Service::start() {
  impl_->restore_sessions();
  const int port = impl_->server.bind_to_any_port(impl_->options.host);
  if (port <= 0) {
    throw std::runtime_error("cannot bind " + impl_->options.host);
  }
  impl_->bound_port = port;
  impl_->listener = std::thread([this] {
    impl_->server.listen_after_bind();
  });
  impl_->server.wait_until_ready();
}

void Service::stop() { impl_->shutdown(); }

int Service::port() const { return impl_->bound_port; }

}  // namespace prefbo
