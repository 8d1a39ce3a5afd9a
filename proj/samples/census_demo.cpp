// Runs a small census on the window configuration and prints each solution.

#include <cstdio>

#include "pendrot/pendrot.hpp"

int main() {
  using namespace pendrot;
  const double t = 0.6;
  RotationProblem problem{PendulumParams::make({10, 1}, {0.1, 10}), WindingVector::validate({1, 0}), t,
                          Forcing::single_sine(t, 2, 0, 0.04)};
  problem.m0 = 0.05;

  SolverOptions opt;
  opt.density = 4;
  opt.perturbations = 1;
  const auto rep = census(problem, opt);

  std::printf("%d starts, %zu distinct, %d certified, bound %d\n", rep.starts, rep.solutions.size(), rep.certified,
              rep.applicable_bound);
  for (const auto& s : rep.solutions)
    std::printf("  action %+.10f  band %d  Morse index %d  defect %.2e  %s\n", s.action(), s.band, s.morse_index,
                s.certification->defect, s.certification->pass ? "PASS" : "FAIL");
  return rep.meets_bound ? 0 : 1;
}
