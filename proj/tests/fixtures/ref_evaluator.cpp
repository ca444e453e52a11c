// Test evaluator speaking the one-line request/response protocol.
//
//   ref_evaluator ref              conforming: values from ref_values() below
//   ref_evaluator const            always {"tafid": 5.0}
//   ref_evaluator sleep SECONDS    sleeps, then answers like `ref`
//   ref_evaluator nan              every requested value is "NaN"
//   ref_evaluator garbage          prints a line that is not JSON
//   ref_evaluator wrong-id         answers with a different request_id
//   ref_evaluator exit CODE        exits with CODE without answering
//   ref_evaluator flaky STATE      garbage the first time (creates STATE), then `ref`
//   ref_evaluator count FILE       appends a line to FILE, then answers like `ref`
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

namespace {

// Kept in sync with the copy in tests/unit/test_oracle.cpp, which checks
// responses against it without going through this program.
double ref_value(const std::string& objective, const nlohmann::json& decision, const std::string& arch) {
  double weighted = 0.0, plain = 0.0;
  for (std::size_t i = 0; i < decision.size(); ++i) {
    const double d = decision[i].get<double>();
    weighted += static_cast<double>(i + 1) * d;
    plain += d;
  }
  if (objective == "tafid") return 1.0 + 0.25 * weighted + 1e-3 * static_cast<double>(arch.size());
  if (objective == "latency_ms") return 10.0 + plain;
  return 100.0 + 3.0 * plain;
}

int answer(const nlohmann::json& req, bool nan_values) {
  nlohmann::json values = nlohmann::json::object();
  for (const auto& o : req.at("objectives_requested")) {
    const auto name = o.get<std::string>();
    if (nan_values) {
      values[name] = "NaN";
    } else {
      values[name] = ref_value(name, req.at("decision"), req.at("arch").get<std::string>());
    }
  }
  std::cout << nlohmann::json{{"request_id", req.at("request_id")}, {"values", values}}.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "ref";
  const std::string arg = argc > 2 ? argv[2] : "";
  std::string line;
  if (!std::getline(std::cin, line)) return 9;
  const auto req = nlohmann::json::parse(line);

  if (mode == "ref") return answer(req, false);
  if (mode == "const") {
    std::cout << nlohmann::json{{"request_id", req.at("request_id")}, {"values", {{"tafid", 5.0}}}}.dump() << "\n";
    return 0;
  }
  if (mode == "sleep") {
    std::this_thread::sleep_for(std::chrono::duration<double>(std::stod(arg)));
    return answer(req, false);
  }
  if (mode == "nan") return answer(req, true);
  if (mode == "garbage") {
    std::cout << "this is not a response\n";
    return 0;
  }
  if (mode == "wrong-id") {
    std::cout << nlohmann::json{{"request_id", "someone-else"}, {"values", {{"tafid", 1.0}}}}.dump() << "\n";
    return 0;
  }
  if (mode == "exit") return std::stoi(arg);
  if (mode == "flaky") {
    if (!std::ifstream(arg)) {
      std::ofstream(arg) << "seen\n";
      std::cout << "{\"request_id\": \n";
      return 0;
    }
    return answer(req, false);
  }
  if (mode == "count") {
    std::ofstream(arg, std::ios::app) << req.at("request_id").get<std::string>() << "\n";
    return answer(req, false);
  }
  std::fprintf(stderr, "unknown mode %s\n", mode.c_str());
  return 64;
}
