#include <cstdio>
#include <fstream>

#include <gtest/gtest.h>

#include "burstnorm/model_io.hpp"

using namespace burstnorm;

namespace {

constexpr const char* kScalarModel = R"({
  "modes": [
    {"A": [[0.5]], "J": [[1]], "C": [[1]], "E": [[0]]},
    {"A": [[0.1]], "J": [[1]], "C": [[2]], "E": [[0]]}
  ],
  "transition_matrix": [[0.7, 0.3], [0.4, 0.6]],
  "mode_labels": ["lost", "received"]
})";

ErrorKind kind_of(const std::string& text) {
  try {
    parse_model_json(text);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for: " << text;
  return ErrorKind::kDomain;
}

}  // namespace

TEST(ParseModel, ReadsModesChainAndLabels) {
  const auto doc = parse_model_json(kScalarModel);
  ASSERT_EQ(doc.modes.size(), 2u);
  EXPECT_DOUBLE_EQ(doc.modes[1].C(0, 0), 2.0);
  ASSERT_TRUE(doc.transition_matrix.has_value());
  EXPECT_DOUBLE_EQ((*doc.transition_matrix)(1, 0), 0.4);
  EXPECT_EQ(doc.labels[0], "lost");
  EXPECT_FALSE(doc.sample_period.has_value());
  EXPECT_EQ(doc.discrete_modes().modes[0].A, doc.modes[0].A);
}

TEST(ParseModel, DiscretizesWhenPeriodGiven) {
  const auto doc = parse_model_json(R"({
    "modes": [{"A": [[-2]], "J": [[1]], "C": [[1]], "E": [[0]]}],
    "discretization": {"T": 0.1}
  })");
  ASSERT_TRUE(doc.sample_period.has_value());
  const auto set = doc.discrete_modes();
  EXPECT_NEAR(set.modes[0].A(0, 0), std::exp(-0.2), 1e-15);
}

TEST(ParseModel, ReportsMalformedInput) {
  EXPECT_EQ(kind_of("{not json"), ErrorKind::kIo);
  EXPECT_EQ(kind_of("[]"), ErrorKind::kIo);
  EXPECT_EQ(kind_of(R"({"modes": []})"), ErrorKind::kIo);
  EXPECT_EQ(kind_of(R"({"modes": [{"A": [[1]], "J": [[1]], "C": [[1]]}]})"), ErrorKind::kIo);
  EXPECT_EQ(kind_of(R"({"modes": [{"A": [[1, 2], [3]], "J": [[1]], "C": [[1]], "E": [[0]]}]})"),
            ErrorKind::kIo);
  EXPECT_EQ(kind_of(R"({"modes": [{"A": [["x"]], "J": [[1]], "C": [[1]], "E": [[0]]}]})"),
            ErrorKind::kIo);
  EXPECT_EQ(kind_of(R"({"modes": [{"A": [[1]], "J": [[1, 2]], "C": [[1]], "E": [[0]]}]})"),
            ErrorKind::kShape);
  EXPECT_EQ(kind_of(R"({"modes": [{"A": [[1]], "J": [[1]], "C": [[1]], "E": [[0]]}],
                        "discretization": {"T": -1}})"),
            ErrorKind::kIo);
  EXPECT_THROW(read_model_file("/nonexistent/model.json"), Error);
}

TEST(ModelJson, RoundTripsExactly) {
  const auto set = zoh_discretize(build_example(), kExampleSamplePeriod);
  const auto model = attach_chain(set, gilbert_matrix(GilbertParams(0.3, 1.0 / 3.0)));
  const auto doc = parse_model_json(model_to_json(model));
  ASSERT_EQ(doc.modes.size(), model.n_modes());
  for (std::size_t i = 0; i < model.n_modes(); ++i) {
    EXPECT_EQ(doc.modes[i].A, model.mode(i).A);
    EXPECT_EQ(doc.modes[i].J, model.mode(i).J);
    EXPECT_EQ(doc.modes[i].C, model.mode(i).C);
    EXPECT_EQ(doc.modes[i].E, model.mode(i).E);
  }
  EXPECT_EQ(*doc.transition_matrix, model.chain().matrix());
  EXPECT_EQ(doc.labels, model.labels());
}

TEST(CertificateJson, RoundTripsAndReverifies) {
  const Mode a{Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
               Matrix::Zero(1, 1)};
  const Mode b{Matrix::Constant(1, 1, -0.3), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
               Matrix::Zero(1, 1)};
  const MjlsModel model({a, b}, gilbert_matrix(GilbertParams(0.4, 0.2)));
  const auto result = hinf_norm(model);
  const std::string text = certificate_to_json(model, result);
  const auto parsed = nlohmann::json::parse(text);
  EXPECT_EQ(parsed["solver"]["id"], kSolverId);
  EXPECT_EQ(parsed["norm"].get<double>(), result.norm);
  const auto cert = parse_certificate_json(text);
  EXPECT_EQ(cert.gamma, result.gamma_star);
  ASSERT_EQ(cert.P.size(), 2u);
  EXPECT_EQ(cert.P[1], result.certificate.P[1]);
  EXPECT_TRUE(verify_certificate(model, cert, cert.margin / 2));
}
