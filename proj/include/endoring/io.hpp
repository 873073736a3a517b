#pragma once

// JSON forms of algebras, orders, problem files, results and trace events.
// Rationals travel as "num/den" strings, integers as decimal strings.

#include <endoring/pipeline.hpp>

#include <json.hpp>

namespace endoring::io {

using nlohmann::json;

inline std::string rat_str(const Rat& x) { return x.get_num().get_str() + "/" + x.get_den().get_str(); }

inline Rat rat_from(const json& j) {
  if (j.is_string()) return parse_rat(j.get<std::string>());
  if (j.is_number_integer()) return Rat(Int(std::to_string(j.get<long long>())));
  throw ParseError("expected a rational as a \"num/den\" string");
}

inline Int int_from(const json& j) {
  if (j.is_string()) return parse_int(j.get<std::string>());
  if (j.is_number_integer()) return Int(std::to_string(j.get<long long>()));
  throw ParseError("expected an integer");
}

inline const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

inline json vec_json(const Vec4& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(rat_str(x));
  return a;
}

inline Vec4 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("expected a vector of 4 rationals");
  return {rat_from(j[0]), rat_from(j[1]), rat_from(j[2]), rat_from(j[3])};
}

inline json algebra_json(const QuaternionAlgebra& alg) {
  return {{"a", rat_str(alg.a())}, {"b", rat_str(alg.b())}, {"p", alg.p().get_str()}};
}

inline AlgebraPtr algebra_from(const json& j) {
  return QuaternionAlgebra::create(rat_from(field(j, "a")), rat_from(field(j, "b")), int_from(field(j, "p")));
}

/// {algebra, basis, label}; the basis is the canonical column basis.
inline json order_json(const Order& o, const std::string& label = "") {
  json b = json::array();
  for (const auto& c : o.basis()) b.push_back(vec_json(c));
  json j{{"algebra", algebra_json(*o.algebra())}, {"basis", b}};
  if (!label.empty()) j["label"] = label;
  return j;
}

inline Order order_from(const json& j, const AlgebraPtr& fallback = nullptr) {
  AlgebraPtr alg = j.contains("algebra") ? algebra_from(j.at("algebra")) : fallback;
  if (!alg) throw ParseError("order has no algebra");
  const json& b = field(j, "basis");
  if (!b.is_array() || b.empty()) throw ParseError("order basis must be a nonempty list");
  std::vector<Vec4> gens;
  for (const auto& v : b) gens.push_back(vec_from(v));
  return verify_order(std::span<const Vec4>(gens), alg);
}

using Factorization = std::vector<std::pair<Int, int>>;

inline json factorization_json(const Factorization& f) {
  json a = json::array();
  for (const auto& [q, e] : f) a.push_back({{"prime", q.get_str()}, {"exponent", e}});
  return a;
}

inline Factorization factorization_from(const json& j) {
  if (!j.is_array()) throw ParseError("factorization must be a list");
  Factorization f;
  for (const auto& x : j) {
    if (x.is_array() && x.size() == 2) {
      f.emplace_back(int_from(x[0]), x[1].get<int>());
    } else {
      f.emplace_back(int_from(field(x, "prime")), field(x, "exponent").get<int>());
    }
  }
  return f;
}

struct Problem {
  Order o0;
  Factorization factorization;
  json oracle;
  std::optional<int> precision_override;
  std::map<Int, Order> enlargements;
  json source;  // the file as read
};

inline Problem problem_from(const json& j) {
  AlgebraPtr alg = j.contains("algebra") ? algebra_from(j.at("algebra")) : nullptr;
  Order o0 = order_from(field(j, "order"), alg);
  Factorization f = factorization_from(field(j, "factorization"));
  check_factorization(o0, f);
  Problem p{o0, f, j.value("oracle", json(nullptr)), std::nullopt, {}, j};
  if (j.contains("options")) {
    const json& o = j.at("options");
    if (o.contains("precision_override")) p.precision_override = o.at("precision_override").get<int>();
  }
  if (j.contains("enlargements")) {
    for (const auto& x : j.at("enlargements")) {
      p.enlargements.emplace(int_from(field(x, "prime")), order_from(field(x, "order"), o0.algebra()));
    }
  }
  return p;
}

/// The oracle described by the problem (only "hidden-order" is known).
inline std::unique_ptr<DivisionOracle> oracle_from(const json& spec, const AlgebraPtr& alg) {
  if (spec.is_null()) throw ParseError("problem has no oracle");
  std::string kind = field(spec, "kind").get<std::string>();
  if (kind != "hidden-order") throw ParseError("unknown oracle kind \"" + kind + "\"");
  Order hidden = order_from(field(spec, "order"), alg);
  if (!(*hidden.algebra() == *alg)) throw ParseError("oracle order lives in a different algebra");
  return std::make_unique<HiddenOrderOracle>(hidden);
}

inline json local_json(const LocalSolution& s) {
  json path = json::array();
  for (long c : s.path) path.push_back(c == s.q.get_si() ? json("inf") : json(c));
  return {{"q", s.q.get_str()},
          {"e", s.e},
          {"bass", s.bass},
          {"O_q", order_json(s.oq)},
          {"r", s.r},
          {"gamma", path},
          {"vertex", s.vertex},
          {"O_tilde", order_json(s.tilde)},
          {"oracle_calls",
           {{"distance", s.distance_calls}, {"path", s.path_calls}, {"bass", s.bass_calls},
            {"total", s.distance_calls + s.path_calls + s.bass_calls}}}};
}

/// The problem file with a "result" member added.
inline json result_json(const json& problem, const ComputeResult& r) {
  json out = problem;
  json locals = json::array();
  for (const auto& s : r.locals) locals.push_back(local_json(s));
  out["result"] = {{"end", order_json(r.end, "End(E)")},
                   {"discrd", discrd(r.end).get_str()},
                   {"locals", locals},
                   {"oracle_calls", r.oracle_calls}};
  return out;
}

inline json trace_json(const TraceEvent& ev) {
  if (ev.kind == "oracle") {
    return {{"event", "oracle"}, {"q", ev.q.get_str()}, {"stage", ev.stage},
            {"beta", vec_json(ev.beta->coeffs())}, {"n", ev.n.get_str()},
            {"answer", ev.answer}, {"count", ev.count}};
  }
  return {{"event", "tree"}, {"q", ev.q.get_str()}, {"stage", ev.stage}, {"k", ev.level},
          {"candidate", ev.vertex}, {"accepted", ev.answer}};
}

inline json plan_json(const KaniPlan& k) {
  json sq = json::array();
  for (const auto& x : k.squares) sq.push_back(x.get_str());
  return {{"deg_beta", k.deg_beta.get_str()}, {"n", k.n.get_str()}, {"p", k.p.get_str()},
          {"N", k.big_n.get_str()}, {"a", k.a.get_str()}, {"N_plus_a", k.n_plus_a.get_str()},
          {"squares", sq}, {"B", k.bound.get_str()}, {"M", k.m.get_str()}};
}

}  // namespace endoring::io
