#pragma once

// Command reports: a fixed key order so that identical inputs give
// byte-identical JSON.

#include <ostream>
#include <string>

#include <json.hpp>

namespace sprayoid::cli {

using Json = nlohmann::ordered_json;

class Report {
 public:
  explicit Report(std::string command) {
    doc_["report_version"] = 1;
    doc_["command"] = std::move(command);
    doc_["config"] = Json::object();
    doc_["checks"] = Json::array();
    doc_["results"] = Json::object();
  }

  Json& config() { return doc_["config"]; }
  Json& results() { return doc_["results"]; }

  /// Passes when value <= tolerance.
  void check_at_most(const std::string& name, double value, double tolerance, Json witness = nullptr) {
    push(name, value, tolerance, "<=", value <= tolerance, std::move(witness));
  }
  void check_at_least(const std::string& name, double value, double bound, Json witness = nullptr) {
    push(name, value, bound, ">=", value >= bound, std::move(witness));
  }
  void check_true(const std::string& name, bool holds, Json witness = nullptr) {
    push(name, holds, nullptr, "holds", holds, std::move(witness));
  }
  void check_equal(const std::string& name, const std::string& value, const std::string& expected) {
    push(name, value, expected, "==", value == expected, nullptr);
  }

  void set_error(const std::string& kind, const std::string& message) {
    doc_["error"] = Json{{"kind", kind}, {"message", message}};
  }
  void set_wall_time(double seconds) { wall_time_ = seconds; }

  bool passed() const {
    if (doc_.contains("error")) return false;
    for (const auto& c : doc_["checks"])
      if (!c["pass"].get<bool>()) return false;
    return true;
  }

  Json finish() const {
    Json out = doc_;
    out["verdict"] = doc_.contains("error") ? "error" : (passed() ? "pass" : "fail");
    if (wall_time_ >= 0.0) out["wall_time_s"] = wall_time_;
    return out;
  }

  void write_json(std::ostream& os) const { os << finish().dump(2) << '\n'; }
  void write_text(std::ostream& os) const;

 private:
  void push(const std::string& name, Json value, Json bound, const char* relation, bool pass, Json witness) {
    Json c;
    c["name"] = name;
    c["value"] = std::move(value);
    c["relation"] = relation;
    c["tolerance"] = std::move(bound);
    c["pass"] = pass;
    if (!witness.is_null()) c["witness"] = std::move(witness);
    doc_["checks"].push_back(std::move(c));
  }

  Json doc_;
  double wall_time_ = -1.0;
};

}  // namespace sprayoid::cli
