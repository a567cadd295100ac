#pragma once

#include <sodium.h>

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sdeval/board/store.hpp"
#include "sdeval/error.hpp"

// Wire API (JSON bodies):
//   GET  /api/v1/leaderboard?task=&view=        view=private needs the operator token
//   GET  /api/v1/teams/{id}/history?task=&view=
//   GET  /api/v1/roc?team=&task=&view=
//   GET  /api/v1/round
//   POST /api/v1/round   {"active": bool}       operator
//   POST /api/v1/runs    run ingest             operator, Idempotency-Key header or body field
// Errors: {"error": <code>, "message": ..., "ids": [...]}.

namespace sdeval::board {

inline constexpr const char* kOperatorTokenEnv = "SDEVAL_OPERATOR_TOKEN";

inline int http_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::kUnauthorized: return 401;
    case ErrorCode::kRoundActive: return 403;
    case ErrorCode::kUnknownTeam:
    case ErrorCode::kScoresUnavailable: return 404;
    case ErrorCode::kDuplicateRun: return 409;
    case ErrorCode::kIo: return 500;
    default: return 400;
  }
}

struct ServerOptions {
  std::string operator_token;  // empty: operator endpoints always refuse
  std::filesystem::path ui_dir;  // served under /ui/ when set
};

inline ServerOptions options_from_env() {
  ServerOptions o;
  if (const char* t = std::getenv(kOperatorTokenEnv)) o.operator_token = t;
  return o;
}

namespace detail {

inline bool token_matches(const std::string& expected, const std::string& given) {
  if (expected.empty() || given.size() != expected.size()) return false;
  return sodium_memcmp(expected.data(), given.data(), expected.size()) == 0;
}

inline void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, const Error& e) {
  send_json(res, http_status(e.code()), json{{"error", to_string(e.code())}, {"message", e.what()}, {"ids", e.ids()}});
}

}  // namespace detail

// Registers the API on `srv`. `board` must outlive the server.
inline void install_routes(httplib::Server& srv, Board& board, ServerOptions opt) {
  auto authorized = [token = opt.operator_token](const httplib::Request& req) {
    const auto h = req.get_header_value("Authorization");
    const std::string prefix = "Bearer ";
    return h.rfind(prefix, 0) == 0 && detail::token_matches(token, h.substr(prefix.size()));
  };
  auto require_operator = [authorized](const httplib::Request& req) {
    if (!authorized(req)) fail(ErrorCode::kUnauthorized, "operator credential required");
  };
  auto view_of = [require_operator](const httplib::Request& req) {
    const View v = parse_view(req.get_param_value("view"));
    if (v == View::kPrivate) require_operator(req);
    return v;
  };
  auto task_of = [](const httplib::Request& req) {
    const auto t = req.get_param_value("task");
    return manifest::parse_task(t.empty() ? "task1" : t);
  };
  auto guarded = [](auto fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        detail::send_error(res, e);
      } catch (const json::exception& e) {
        detail::send_error(res, Error(ErrorCode::kInvalidArgument, e.what()));
      }
    };
  };

  srv.Get("/api/v1/leaderboard", guarded([&board, view_of, task_of](const httplib::Request& req, httplib::Response& res) {
    const auto task = task_of(req);
    const auto view = view_of(req);
    detail::send_json(res, 200, json{{"task", manifest::to_string(task)},
                                     {"view", to_string(view)},
                                     {"entries", board.leaderboard(task, view)}});
  }));

  srv.Get(R"(/api/v1/teams/([^/]+)/history)",
          guarded([&board, view_of, task_of](const httplib::Request& req, httplib::Response& res) {
            const std::string team = req.matches[1];
            const auto task = task_of(req);
            const auto view = view_of(req);
            detail::send_json(res, 200, json{{"team_id", team},
                                             {"task", manifest::to_string(task)},
                                             {"view", to_string(view)},
                                             {"points", board.history(team, task, view)}});
          }));

  srv.Get("/api/v1/roc", guarded([&board, view_of, task_of](const httplib::Request& req, httplib::Response& res) {
    const auto team = req.get_param_value("team");
    if (team.empty()) fail(ErrorCode::kInvalidArgument, "team parameter required");
    const auto task = task_of(req);
    const auto view = view_of(req);
    detail::send_json(res, 200, board.roc(team, task, view));
  }));

  srv.Get("/api/v1/round", guarded([&board](const httplib::Request&, httplib::Response& res) {
    detail::send_json(res, 200, json{{"active", board.round_active()}});
  }));

  srv.Post("/api/v1/round", guarded([&board, require_operator](const httplib::Request& req, httplib::Response& res) {
    require_operator(req);
    const auto body = json::parse(req.body);
    board.set_round_active(body.at("active").get<bool>());
    detail::send_json(res, 200, json{{"active", board.round_active()}});
  }));

  srv.Post("/api/v1/runs", guarded([&board, require_operator](const httplib::Request& req, httplib::Response& res) {
    require_operator(req);
    const auto body = json::parse(req.body);
    RunEvent ev;
    ev.idempotency_key = req.get_header_value("Idempotency-Key");
    if (ev.idempotency_key.empty()) ev.idempotency_key = body.value("idempotency_key", std::string{});
    ev.team_id = body.at("team_id").get<std::string>();
    ev.task = manifest::parse_task(body.at("task").get<std::string>());
    ev.timestamp_ms = body.value("timestamp_ms", std::int64_t{0});
    ev.public_report = body.at("public_report").get<MetricsReport>();
    ev.private_report = body.at("private_report").get<MetricsReport>();
    const auto key = ev.idempotency_key;
    const auto ts = board.ingest(std::move(ev));
    detail::send_json(res, 201, json{{"ack", true}, {"idempotency_key", key}, {"timestamp_ms", ts}});
  }));

  if (!opt.ui_dir.empty()) srv.set_mount_point("/ui", opt.ui_dir.string());
}

}  // namespace sdeval::board
