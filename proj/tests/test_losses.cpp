#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "cpmix/errors.hpp"
#include "cpmix/losses.hpp"
#include "cpmix/rng.hpp"

using namespace cpmix;

namespace {

// Finite-difference gradient of a loss in its logits.
template <class Loss>
std::vector<double> fd_logit_grad(std::vector<double> logits, const Loss& loss,
                                  double h = 1e-5) {
  std::vector<double> grad(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double saved = logits[i];
    logits[i] = saved + h;
    const double up = loss(logits);
    logits[i] = saved - h;
    const double down = loss(logits);
    logits[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

SoftLabel random_soft_label(std::size_t c, Rng& rng) {
  std::vector<double> p(c);
  double sum = 0.0;
  for (double& v : p) {
    v = rng.uniform_open();
    sum += v;
  }
  for (double& v : p) v /= sum;
  return SoftLabel(std::move(p));
}

}  // namespace

TEST_CASE("uniform logits with a one-hot target cost ln C") {
  const std::vector<double> logits{0.7, 0.7, 0.7, 0.7};
  const auto lg = cross_entropy_loss(logits, SoftLabel::one_hot(2, 4));
  CHECK(lg.loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("gradient vanishes when the target equals the softmax") {
  const std::vector<double> logits{0.3, -1.2, 2.0};
  const auto lsm = log_softmax(logits);
  std::vector<double> target(3);
  for (std::size_t i = 0; i < 3; ++i) target[i] = std::exp(lsm[i]);
  const auto lg = cross_entropy_loss(logits, SoftLabel(target));
  for (double g : lg.grad) CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("cross-entropy gradient matches finite differences") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> logits(5);
    for (double& z : logits) z = 1.5 * rng.gaussian();
    const SoftLabel target = random_soft_label(5, rng);
    const auto lg = cross_entropy_loss(logits, target);
    const auto fd = fd_logit_grad(
        logits, [&](const std::vector<double>& z) {
          return cross_entropy_loss(z, target).loss;
        });
    for (std::size_t i = 0; i < 5; ++i) {
      const double denom = std::max({std::abs(fd[i]), std::abs(lg.grad[i]), 1e-6});
      CHECK(std::abs(fd[i] - lg.grad[i]) / denom < 1e-4);
    }
  }
}

TEST_CASE("cross-entropy stays nonnegative and tiny at high margin") {
  Rng rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> logits(4);
    for (double& z : logits) z = 5.0 * rng.gaussian();
    CHECK(cross_entropy_loss(logits, random_soft_label(4, rng)).loss >= 0.0);
  }
  // Margin of 20 on the target class drives the loss below 1e-6.
  const std::vector<double> confident{25.0, 5.0, 5.0, 5.0};
  CHECK(cross_entropy_loss(confident, SoftLabel::one_hot(0, 4)).loss < 1e-6);
}

TEST_CASE("log-sum-exp stabilization survives huge logits") {
  const std::vector<double> logits{1000.0, 999.0};
  const auto lg = cross_entropy_loss(logits, SoftLabel::one_hot(0, 2));
  CHECK(std::isfinite(lg.loss));
  CHECK(lg.loss == doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-9));
}

TEST_CASE("non-finite logits raise a numeric error") {
  const std::vector<double> logits{1.0, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(cross_entropy_loss(logits, SoftLabel::one_hot(0, 2)), NumericError);
}

TEST_CASE("balanced softmax with uniform counts equals cross-entropy") {
  Rng rng(15);
  const std::vector<int> counts{37, 37, 37, 37};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> logits(4);
    for (double& z : logits) z = 4.0 * rng.gaussian();
    const int y = static_cast<int>(rng.bounded(4));
    const auto bs = balanced_softmax_loss(logits, y, counts);
    const auto ce = cross_entropy_loss(logits, SoftLabel::one_hot(y, 4));
    CHECK(std::abs(bs.loss - ce.loss) < 1e-12);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(bs.grad[i] - ce.grad[i]) < 1e-12);
  }
}

TEST_CASE("balanced softmax reproduces the shifted-softmax value") {
  const std::vector<double> logits{0.0, 0.0};
  const std::vector<int> counts{1000, 50};
  const auto lg = balanced_softmax_loss(logits, 1, counts);
  CHECK(lg.loss == doctest::Approx(-std::log(50.0 / 1050.0)).epsilon(1e-12));
  CHECK(lg.loss == doctest::Approx(3.0445224377234230).epsilon(1e-12));
}

TEST_CASE("balanced softmax gradient matches finite differences") {
  Rng rng(16);
  const std::vector<int> counts{500, 123, 9, 77, 2};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> logits(5);
    for (double& z : logits) z = 1.5 * rng.gaussian();
    const int y = static_cast<int>(rng.bounded(5));
    const auto lg = balanced_softmax_loss(logits, y, counts);
    const auto fd = fd_logit_grad(
        logits, [&](const std::vector<double>& z) {
          return balanced_softmax_loss(z, y, counts).loss;
        });
    for (std::size_t i = 0; i < 5; ++i) {
      const double denom = std::max({std::abs(fd[i]), std::abs(lg.grad[i]), 1e-6});
      CHECK(std::abs(fd[i] - lg.grad[i]) / denom < 1e-4);
    }
  }
}

TEST_CASE("soft-target balanced softmax reduces to the hard version") {
  Rng rng(17);
  const std::vector<int> counts{200, 10, 55};
  std::vector<double> logits{0.4, -0.3, 1.1};
  const auto hard = balanced_softmax_loss(logits, 1, counts);
  const auto soft = balanced_softmax_loss(logits, SoftLabel::one_hot(1, 3), counts);
  CHECK(hard.loss == soft.loss);
  CHECK(hard.grad == soft.grad);

  // And its gradient also checks out against finite differences.
  const SoftLabel target = random_soft_label(3, rng);
  const auto lg = balanced_softmax_loss(logits, target, counts);
  const auto fd = fd_logit_grad(
      logits, [&](const std::vector<double>& z) {
        return balanced_softmax_loss(z, target, counts).loss;
      });
  for (std::size_t i = 0; i < 3; ++i) {
    const double denom = std::max({std::abs(fd[i]), std::abs(lg.grad[i]), 1e-6});
    CHECK(std::abs(fd[i] - lg.grad[i]) / denom < 1e-4);
  }
}

TEST_CASE("zero class counts are rejected") {
  const std::vector<double> logits{0.0, 0.0};
  const std::vector<int> counts{10, 0};
  CHECK_THROWS_AS(balanced_softmax_loss(logits, 0, counts), std::invalid_argument);
}

TEST_CASE("length mismatches are rejected") {
  const std::vector<double> logits{0.0, 0.0, 0.0};
  CHECK_THROWS_AS(cross_entropy_loss(logits, SoftLabel::one_hot(0, 2)),
                  std::invalid_argument);
  const std::vector<int> counts{5, 5};
  CHECK_THROWS_AS(balanced_softmax_loss(logits, 0, counts), std::invalid_argument);
}
