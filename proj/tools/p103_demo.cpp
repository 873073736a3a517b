// Walks through the bundled p = 103 problem stage by stage.

#include <endoring/endoring.hpp>

#include <fstream>
#include <iostream>

using namespace endoring;

int main(int argc, char** argv) {
  std::string path = argc > 1 ? argv[1] : std::string(ENDORING_DATA_DIR) + "/p103_example.json";
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open " << path << "\n";
    return 2;
  }
  auto src = nlohmann::json::parse(in);
  io::Problem prob = io::problem_from(src);
  auto oracle = io::oracle_from(prob.oracle, prob.o0.algebra());
  const Order& o0 = prob.o0;

  std::cout << "discrd(O0) = " << discrd(o0) << "\n";
  for (const auto& [q, e] : prob.factorization) {
    if (q == o0.algebra()->p()) continue;
    std::cout << "q = " << q << ", e = " << e << ": Gorenstein " << ternary_gorenstein_test(o0, q)
              << ", Bass " << is_bass_at(o0, q) << "\n";
  }
  ComputeResult res = compute_endomorphism_ring(o0, prob.factorization, *oracle);
  for (const auto& s : res.locals) {
    std::cout << "q = " << s.q << ": discrd(O_q) = " << discrd(s.oq) << ", r = " << s.r
              << ", vertex " << s.vertex << ", oracle calls " << s.distance_calls + s.path_calls + s.bass_calls
              << "\n";
  }
  std::cout << "End(E) basis:\n";
  for (const auto& b : res.end.basis()) std::cout << "  " << QuatElement(res.end.algebra(), b) << "\n";
  std::cout << "discrd(End(E)) = " << discrd(res.end) << ", oracle calls " << res.oracle_calls << "\n";
  return 0;
}
