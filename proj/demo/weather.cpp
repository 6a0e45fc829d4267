// Two-state weather chain, its three-state refinement, and a few quantities that survive the round trip.

#include <cstdio>

#include "lumpgeo/lumpgeo.hpp"

using namespace lumpgeo;

namespace {

void print(const char* title, const Eigen::MatrixXd& a) {
  std::printf("%s\n", title);
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) std::printf("  %.4f", a(i, j));
    std::printf("\n");
  }
}

}  // namespace

int main() {
  Eigen::MatrixXd m(2, 2);
  m << 0.8, 0.2, 0.5, 0.5;  // sunny, rainy
  StochasticKernel p = StochasticKernel::from_matrix(m);

  // rainy splits into light and heavy
  Lumping kappa(2, {0, 1, 1});
  Eigen::MatrixXd lam(3, 3);
  lam << 1, 0.5, 0.5, 1, 0.6, 0.4, 1, 0.4, 0.6;
  MarkovEmbedding e = MarkovEmbedding::normalized(kappa, lam);

  StochasticKernel lifted = embed_markov(e, p);
  print("base kernel", p.matrix());
  print("embedded kernel", lifted.matrix());
  print("lumped back", lump(lifted, kappa).matrix());

  Eigen::VectorXd pi = stationary(p), pil = stationary(lifted);
  std::printf("stationary: (%.6f, %.6f), embedded: (%.6f, %.6f, %.6f)\n", pi[0], pi[1], pil[0], pil[1], pil[2]);

  Eigen::MatrixXd m2(2, 2);
  m2 << 0.6, 0.4, 0.3, 0.7;
  StochasticKernel p2 = StochasticKernel::from_matrix(m2);
  std::printf("KL rate: base %.12f, embedded %.12f\n", kl_rate(p, p2), kl_rate(lifted, embed_markov(e, p2)));
  std::printf("entropy rate: base %.6f, embedded %.6f\n", entropy_rate(p), entropy_rate(lifted));

  EProjection lift = max_entropy_lift(p, kappa, Digraph::complete(3));
  print("maximum entropy lift", lift.kernel.matrix());
  std::printf("its entropy rate: %.6f\n", entropy_rate(lift.kernel));

  BistochasticEmbedding b = embed_to_bistochastic(p, rationalize(pi));
  print("doubly stochastic embedding", b.kernel.matrix());
  return 0;
}
