#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "burstnorm/mjls.hpp"
#include "oracles.hpp"

using namespace burstnorm;

namespace {

Mode scalar_mode(double a, double j = 1.0, double c = 1.0, double e = 0.0) {
  return {Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, j), Matrix::Constant(1, 1, c),
          Matrix::Constant(1, 1, e)};
}

// Series for int_0^T e^{As} ds.
Matrix integral_oracle(const Matrix& a, double t) {
  Matrix sum = Matrix::Zero(a.rows(), a.cols());
  Matrix power = Matrix::Identity(a.rows(), a.cols());
  double factor = t;
  for (int k = 0; k < 40; ++k) {
    sum += factor * power;
    power = oracle::triple_loop_product(power, a);
    factor *= t / (k + 2);
  }
  return sum;
}

}  // namespace

TEST(Mode, ValidatesShapes) {
  Mode bad = scalar_mode(0.5);
  bad.C = Matrix::Zero(1, 2);
  try {
    validate_mode(bad);
    FAIL() << "expected a shape error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
  }
  Mode mismatch = scalar_mode(0.5);
  mismatch.A = Matrix::Identity(2, 2);
  EXPECT_THROW(validate_mode(mismatch), Error);
  EXPECT_THROW(validate_modes({}), Error);
}

TEST(MjlsModel, ChainMustMatchModeCount) {
  EXPECT_THROW(MjlsModel({scalar_mode(0.5)}, TransitionMatrix::identity(2)), Error);
  const MjlsModel ok({scalar_mode(0.5), scalar_mode(-0.25, 3.0)}, TransitionMatrix::identity(2));
  EXPECT_EQ(ok.n_modes(), 2u);
  EXPECT_DOUBLE_EQ(ok.max_abs_entry(), 3.0);
}

TEST(Example, MatricesAreVerbatim) {
  const auto plant = build_example();
  EXPECT_DOUBLE_EQ(plant.A(2, 1), 26.29);
  EXPECT_DOUBLE_EQ(plant.A(2, 2), -15.96);
  EXPECT_DOUBLE_EQ(plant.A(3, 1), 68.52);
  EXPECT_DOUBLE_EQ(plant.A(3, 3), -0.04);
  EXPECT_EQ(plant.J, 0.5 * Matrix::Identity(4, 4));
  ASSERT_EQ(plant.outputs.size(), 2u);
  EXPECT_EQ(plant.outputs[0].label, kReceivedLabel);
  EXPECT_DOUBLE_EQ(plant.outputs[0].E(1, 1), 0.05);
  EXPECT_EQ(plant.outputs[1].C, Matrix::Zero(2, 4));
}

TEST(Zoh, ScalarClosedForm) {
  const ContinuousPlant plant{Matrix::Constant(1, 1, -2.0), Matrix::Constant(1, 1, 1.0),
                              {{Matrix::Ones(1, 1), Matrix::Zero(1, 1), ""}}};
  const auto set = zoh_discretize(plant, 0.1);
  EXPECT_NEAR(set.modes[0].A(0, 0), std::exp(-0.2), 1e-15);
  EXPECT_NEAR(set.modes[0].J(0, 0), (1.0 - std::exp(-0.2)) / 2.0, 1e-15);
}

TEST(Zoh, ExampleMatchesSeries) {
  const auto plant = build_example();
  const auto set = zoh_discretize(plant, kExampleSamplePeriod);
  ASSERT_EQ(set.modes.size(), 2u);
  const Matrix ad = oracle::taylor_exp(plant.A, kExampleSamplePeriod);
  const Matrix jd = integral_oracle(plant.A, kExampleSamplePeriod) * plant.J;
  for (const auto& mode : set.modes) {
    EXPECT_LT((mode.A - ad).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LT((mode.J - jd).cwiseAbs().maxCoeff(), 1e-14);
  }
  EXPECT_EQ(set.modes[0].C, plant.outputs[0].C);
  EXPECT_EQ(set.modes[1].E, plant.outputs[1].E);
  EXPECT_THROW(zoh_discretize(plant, 0.0), Error);
}

TEST(Example, OpenLoopPlantIsUnstable) {
  // The shared A has a positive real eigenvalue, so no channel can make
  // the jump system mean-square stable.
  const auto set = zoh_discretize(build_example(), kExampleSamplePeriod);
  EXPECT_GT(spectral_radius(set.modes[0].A), 1.0);
  const auto model = attach_chain(set, bernoulli_matrix(BernoulliParams(0.3)));
  EXPECT_GT(mss_radius(model), 1.0);
}

TEST(AttachChain, LabelledPairFollowsMapping) {
  const auto set = zoh_discretize(build_example(), kExampleSamplePeriod);
  const auto chain = gilbert_matrix(GilbertParams(0.4, 0.1));
  const auto lost_first = attach_chain(set, chain, ModeMapping::kStateOneLost);
  EXPECT_EQ(lost_first.labels()[kLossState], kLostLabel);
  EXPECT_EQ(lost_first.mode(kLossState).C, Matrix::Zero(2, 4));
  const auto received_first = attach_chain(set, chain, ModeMapping::kStateOneReceived);
  EXPECT_EQ(received_first.labels()[0], kReceivedLabel);
  EXPECT_THROW(attach_chain(set, TransitionMatrix::identity(3)), Error);
}

TEST(AttachChain, UnlabelledSetKeepsOrReversesOrder) {
  const ModeSet set{{scalar_mode(0.1), scalar_mode(0.2)}, {}};
  const auto chain = TransitionMatrix::identity(2);
  EXPECT_DOUBLE_EQ(attach_chain(set, chain).mode(0).A(0, 0), 0.1);
  EXPECT_DOUBLE_EQ(attach_chain(set, chain, ModeMapping::kStateOneReceived).mode(0).A(0, 0), 0.2);
}

TEST(ModeMapping, ParsesBothNames) {
  EXPECT_EQ(parse_mode_mapping("state1_lost"), ModeMapping::kStateOneLost);
  EXPECT_EQ(parse_mode_mapping(to_string(ModeMapping::kStateOneReceived)),
            ModeMapping::kStateOneReceived);
  EXPECT_THROW(parse_mode_mapping("lost"), Error);
}

TEST(SecondMoment, ScalarModesMatchClosedForm) {
  Matrix p(2, 2);
  p << 0.7, 0.3, 0.4, 0.6;
  const double a1 = 0.9, a2 = 1.2;
  const MjlsModel model({scalar_mode(a1), scalar_mode(a2)}, TransitionMatrix(p));
  Matrix expected(2, 2);
  expected << p(0, 0) * a1 * a1, p(1, 0) * a2 * a2,
              p(0, 1) * a1 * a1, p(1, 1) * a2 * a2;
  EXPECT_LT((second_moment_operator(model) - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(mss_radius(model), oracle::spectral_radius(expected), 1e-12);
}

TEST(SecondMoment, IdenticalModesReduceToSquaredRadius) {
  std::mt19937_64 rng(211);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = oracle::random_matrix(rng, 3, 3);
    const Mode mode{a, Matrix::Ones(3, 1), Matrix::Ones(1, 3), Matrix::Zero(1, 1)};
    const MjlsModel model({mode, mode}, gilbert_matrix(GilbertParams(0.3, 0.6)));
    const double rho = oracle::spectral_radius(a);
    EXPECT_NEAR(mss_radius(model), rho * rho, 1e-10 * std::max(1.0, rho * rho));
  }
}

TEST(SecondMoment, PredictsSecondMomentRecursion) {
  // E[x x' 1{theta = j}] evolves by the operator; compare against a direct
  // propagation of the per-mode second moments.
  Matrix p(2, 2);
  p << 0.8, 0.2, 0.5, 0.5;
  std::mt19937_64 rng(223);
  const Matrix a0 = oracle::random_matrix(rng, 2, 2, 0.8);
  const Matrix a1 = oracle::random_matrix(rng, 2, 2, 0.8);
  const Mode m0{a0, Matrix::Zero(2, 1), Matrix::Zero(1, 2), Matrix::Zero(1, 1)};
  const Mode m1{a1, Matrix::Zero(2, 1), Matrix::Zero(1, 2), Matrix::Zero(1, 1)};
  const MjlsModel model({m0, m1}, TransitionMatrix(p));

  const Matrix q0 = Matrix::Identity(2, 2) * 0.3;
  const Matrix q1 = Matrix::Identity(2, 2) * 0.7;
  Vector vec(8);
  vec << Eigen::Map<const Vector>(q0.data(), 4), Eigen::Map<const Vector>(q1.data(), 4);
  const Vector next = second_moment_operator(model) * vec;
  const Matrix n0 = p(0, 0) * a0 * q0 * a0.transpose() + p(1, 0) * a1 * q1 * a1.transpose();
  const Matrix n1 = p(0, 1) * a0 * q0 * a0.transpose() + p(1, 1) * a1 * q1 * a1.transpose();
  EXPECT_LT((next.head(4) - Eigen::Map<const Vector>(n0.data(), 4)).norm(), 1e-14);
  EXPECT_LT((next.tail(4) - Eigen::Map<const Vector>(n1.data(), 4)).norm(), 1e-14);
}

TEST(Simulate, LinearInInputAndZeroForZeroInput) {
  std::mt19937_64 rng(227);
  const Mode m0{oracle::random_matrix(rng, 3, 3, 0.5), oracle::random_matrix(rng, 3, 2),
                oracle::random_matrix(rng, 1, 3), oracle::random_matrix(rng, 1, 2)};
  const Mode m1{oracle::random_matrix(rng, 3, 3, 0.5), oracle::random_matrix(rng, 3, 2),
                oracle::random_matrix(rng, 1, 3), oracle::random_matrix(rng, 1, 2)};
  const MjlsModel model({m0, m1}, gilbert_matrix(GilbertParams(0.3, 0.4)));
  const auto theta = sample_path(model.chain(), 50, 5);
  const auto w1 = unit_energy_input(2, 50, 1);
  const auto w2 = unit_energy_input(2, 50, 2);
  std::vector<Vector> sum(50);
  for (std::size_t k = 0; k < 50; ++k) sum[k] = 2.0 * w1[k] - 3.0 * w2[k];
  const Vector x0 = Vector::Zero(3);
  const auto t1 = simulate(model, w1, theta, x0);
  const auto t2 = simulate(model, w2, theta, x0);
  const auto ts = simulate(model, sum, theta, x0);
  ASSERT_EQ(ts.x.size(), 51u);
  for (std::size_t k = 0; k < 50; ++k) {
    EXPECT_LT((ts.z[k] - (2.0 * t1.z[k] - 3.0 * t2.z[k])).norm(), 1e-12);
  }
  const std::vector<Vector> zero(50, Vector::Zero(2));
  for (const auto& z : simulate(model, zero, theta, x0).z) EXPECT_EQ(z.norm(), 0.0);
}

TEST(Simulate, ShapeChecks) {
  const MjlsModel model({scalar_mode(0.5)}, TransitionMatrix::identity(1));
  const std::vector<Vector> w(3, Vector::Ones(1));
  EXPECT_THROW(simulate(model, w, std::vector<std::size_t>{0, 0}, Vector::Zero(1)), Error);
  EXPECT_THROW(simulate(model, w, std::vector<std::size_t>{0, 0, 1}, Vector::Zero(1)), Error);
  EXPECT_THROW(simulate(model, w, std::vector<std::size_t>{0, 0, 0}, Vector::Zero(2)), Error);
}

TEST(UnitEnergyInput, HasUnitEnergy) {
  const auto w = unit_energy_input(3, 1000, 77);
  double energy = 0.0;
  for (const auto& wk : w) energy += wk.squaredNorm();
  EXPECT_NEAR(energy, 1.0, 1e-12);
}

TEST(EmpiricalGain, ScalarDelayIsBoundedByOne) {
  // z(k) = x(k), x(k+1) = w(k): gain is ||w(0..h-2)|| <= 1.
  const MjlsModel model({scalar_mode(0.0)}, TransitionMatrix::identity(1));
  const auto gains = empirical_gains(model, 10, 500, 3);
  for (const double g : gains) {
    EXPECT_LE(g, 1.0);
    EXPECT_GT(g, 0.9);
  }
  EXPECT_EQ(empirical_gains(model, 10, 500, 3), gains);
  EXPECT_THROW(empirical_gains(model, 0, 500, 3), Error);
}
