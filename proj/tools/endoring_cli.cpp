// endoring: compute End(E) from a suborder, explore the tree, plan divisions.

#include <endoring/endoring.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace endoring;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kParse = 2, kMath = 3, kOracle = 4 };

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << text;
}

TreeVertex parse_path(long q, const std::string& spec) {
  std::vector<long> steps;
  std::string tok;
  std::stringstream ss(spec);
  while (std::getline(ss, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (tok.empty()) continue;
    if (tok == "inf" || tok == "oo") {
      steps.push_back(q);
      continue;
    }
    std::size_t used = 0;
    long s = 0;
    try {
      s = std::stol(tok, &used);
    } catch (const std::exception&) {
      throw ParseError("bad path step \"" + tok + "\"");
    }
    if (used != tok.size() || s < 0 || s >= q) throw ParseError("bad path step \"" + tok + "\"");
    steps.push_back(s);
  }
  try {
    return TreeVertex::from_path(q, steps);
  } catch (const MathError& e) {
    throw ParseError(std::string("path \"") + spec + "\": " + e.what());
  }
}

/// Three arms of lengths m, n, l leaving the root in different directions.
std::vector<TreeVertex> star(long q, long m, long n, long l) {
  std::vector<long> a(static_cast<std::size_t>(m), 0), b, c(static_cast<std::size_t>(l), q);
  if (n > 0) {
    b.push_back(1);
    b.resize(static_cast<std::size_t>(n), 0);
  }
  return {TreeVertex::from_path(q, a), TreeVertex::from_path(q, b), TreeVertex::from_path(q, c)};
}

struct ComputeArgs {
  std::string input, output, oracle, trace, dot_dir;
  std::optional<int> precision;
  bool deterministic = false;
  bool parallel = false;
};

int run_compute(const ComputeArgs& a) {
  json src = read_json(a.input);
  io::Problem prob = io::problem_from(src);
  json oracle_spec = a.oracle.empty() ? prob.oracle : read_json(a.oracle);
  auto oracle = io::oracle_from(oracle_spec, prob.o0.algebra());
  ComputeOptions opts;
  opts.parallel = a.parallel;
  opts.precision_override = a.precision ? a.precision : prob.precision_override;
  opts.enlargements = prob.enlargements;
  std::ofstream trace;
  if (!a.trace.empty()) {
    trace.open(a.trace);
    if (!trace) throw ParseError("cannot write " + a.trace);
    opts.trace = [&](const TraceEvent& ev) { trace << io::trace_json(ev).dump() << "\n"; };
  }
  auto t0 = std::chrono::steady_clock::now();
  ComputeResult res = compute_endomorphism_ring(prob.o0, prob.factorization, *oracle, opts);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (trace.is_open()) trace << json{{"event", "summary"}, {"oracle_calls", res.oracle_calls}}.dump() << "\n";
  json out = io::result_json(prob.source, res);
  if (a.deterministic) {
    out["result"].erase("elapsed_seconds");
  } else {
    out["result"]["elapsed_seconds"] = secs;
  }
  if (!a.dot_dir.empty()) {
    std::filesystem::create_directories(a.dot_dir);
    for (const auto& s : res.locals) {
      if (s.explored.empty()) continue;
      std::string name = "q" + s.q.get_str();
      write_text((std::filesystem::path(a.dot_dir) / (name + ".dot")).string(), to_dot(s.explored, name));
    }
  }
  write_text(a.output, out.dump(2) + "\n");
  return kOk;
}

int guarded(const std::function<int()>& f) {
  auto fail = [](const char* kind, const std::string& msg, int code) {
    std::cerr << json{{"error", kind}, {"message", msg}}.dump() << "\n";
    return code;
  };
  try {
    return f();
  } catch (const ParseError& e) {
    return fail("parse", e.what(), kParse);
  } catch (const json::exception& e) {
    return fail("parse", e.what(), kParse);
  } catch (const OraclePreconditionError& e) {
    return fail("oracle-precondition", e.what(), kOracle);
  } catch (const MathError& e) {
    return fail("inconsistency", e.what(), kMath);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Endomorphism rings from suborders via the Bruhat-Tits tree"};
  app.require_subcommand(1);

  ComputeArgs ca;
  auto* compute = app.add_subcommand("compute", "Run the full pipeline on a problem file");
  compute->add_option("--input", ca.input, "Problem (or result) JSON file")->required();
  compute->add_option("-o,--output", ca.output, "Result file (default stdout)");
  compute->add_option("--oracle", ca.oracle, "Oracle spec JSON overriding the problem's");
  compute->add_option("--trace", ca.trace, "JSON-lines trace output");
  compute->add_option("--dot-dir", ca.dot_dir, "Directory for per-prime DOT files");
  compute->add_option("--precision-override", ca.precision, "Splitting-map exponent r (mod q^{r+1})");
  compute->add_flag("--deterministic", ca.deterministic, "Omit timing fields");
  compute->add_flag("--parallel-primes", ca.parallel, "Solve the primes concurrently");

  auto* btt = app.add_subcommand("btt", "Bruhat-Tits tree utilities");
  btt->require_subcommand(1);
  long q = 2;
  std::vector<std::string> paths;
  std::string center;
  int radius = 1;
  std::vector<long> star_arms;
  for (auto* sub : {btt->add_subcommand("distance", "Distance between two path specs"),
                    btt->add_subcommand("d3", "d3 of a set of path specs or a star"),
                    btt->add_subcommand("ball", "Vertices of a ball"),
                    btt->add_subcommand("dot", "DOT graph of a ball")}) {
    sub->add_option("-q,--prime", q, "The prime q")->required();
    sub->add_option("--path", paths, "Path spec such as \"inf,1\" (empty for the root)");
    sub->add_option("--center", center, "Center path spec");
    sub->add_option("--radius", radius, "Ball radius");
    if (sub->get_name() == "d3") sub->add_option("--star", star_arms, "Arm lengths m n l")->expected(3);
  }

  std::string deg_s, n_s, p_s;
  auto* div = app.add_subcommand("divide-params", "Print the division planner's parameters");
  div->add_option("--deg", deg_s, "Degree of beta")->required();
  div->add_option("--n", n_s, "Divisor n")->required();
  div->add_option("--p", p_s, "Characteristic p")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kParse;
  }

  if (compute->parsed()) return guarded([&] { return run_compute(ca); });

  if (btt->parsed()) {
    return guarded([&] {
      if (q < 2 || !is_prime(Int(q))) throw ParseError("q must be prime");
      auto* sub = btt->get_subcommands().front();
      const std::string& name = sub->get_name();
      if (name == "distance") {
        if (paths.size() != 2) throw ParseError("distance needs exactly two --path options");
        std::cout << distance(parse_path(q, paths[0]), parse_path(q, paths[1])) << "\n";
      } else if (name == "d3") {
        std::vector<TreeVertex> s;
        if (!star_arms.empty()) {
          for (long x : star_arms)
            if (x < 0) throw ParseError("star arm lengths must be nonnegative");
          s = star(q, star_arms[0], star_arms[1], star_arms[2]);
        }
        for (const auto& p : paths) s.push_back(parse_path(q, p));
        if (s.empty()) throw ParseError("d3 needs --path or --star");
        std::cout << d3(s) << "\n";
      } else {
        if (radius < 0) throw ParseError("radius must be nonnegative");
        auto b = ball(parse_path(q, center), radius);
        if (name == "ball") {
          for (const auto& v : b) std::cout << "[" << v.path_string() << "] " << v.label() << "\n";
        } else {
          std::cout << to_dot(b, "btt_q" + std::to_string(q));
        }
      }
      return 0;
    });
  }

  if (div->parsed()) {
    return guarded([&] {
      Int deg = parse_int(deg_s), n = parse_int(n_s), p = parse_int(p_s);
      auto plan = plan_division(deg, n, p);
      if (!plan) {
        std::cout << json{{"status", "planned-failure"},
                          {"reason", "n^2 does not divide deg(beta)"},
                          {"deg_beta", deg.get_str()},
                          {"n", n.get_str()}}
                         .dump(2)
                  << "\n";
        return 0;
      }
      std::string bad = plan_violation(*plan);
      if (!bad.empty()) throw MathError("plan invariant violated: " + bad);
      json j = io::plan_json(*plan);
      j["status"] = "ok";
      std::cout << j.dump(2) << "\n";
      return 0;
    });
  }
  return 0;
}
