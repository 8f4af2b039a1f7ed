#pragma once

// JSON model documents and certificate export.
//
// Model schema:
//   {
//     "modes": [ {"A": [[..]], "J": [[..]], "C": [[..]], "E": [[..]]}, ... ],
//     "transition_matrix": [[..]],            optional
//     "mode_labels": ["lost", "received"],     optional
//     "discretization": {"T": 0.01}            optional; when present the
//                                              mode matrices are continuous
//                                              time and are ZOH-discretized
//   }
// Matrices are row-major nested arrays. Writers emit 17 significant digits.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "burstnorm/errors.hpp"
#include "burstnorm/hinf.hpp"
#include "burstnorm/mjls.hpp"

namespace burstnorm {

struct ModelDocument {
  std::vector<Mode> modes;  // as written in the file
  std::vector<std::string> labels;
  std::optional<Matrix> transition_matrix;
  std::optional<double> sample_period;  // set when modes are continuous time

  /// Discrete modes, discretizing each mode's (A, J) when needed.
  ModeSet discrete_modes() const {
    ModeSet set;
    set.labels = labels;
    for (const auto& mode : modes) {
      if (!sample_period) {
        set.modes.push_back(mode);
        continue;
      }
      ContinuousPlant plant{mode.A, mode.J, {{mode.C, mode.E, ""}}};
      set.modes.push_back(zoh_discretize(plant, *sample_period).modes.front());
    }
    validate_modes(set.modes);
    return set;
  }
};

namespace internal {

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& what) {
  require(j.is_array() && !j.empty(), ErrorKind::kIo, what + " must be a non-empty array of rows");
  const std::size_t rows = j.size();
  require(j[0].is_array() && !j[0].empty(), ErrorKind::kIo, what + " rows must be non-empty arrays");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    require(j[i].is_array() && j[i].size() == cols, ErrorKind::kIo, what + " is not rectangular");
    for (std::size_t k = 0; k < cols; ++k) {
      require(j[i][k].is_number(), ErrorKind::kIo, what + " contains a non-number");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  require(m.allFinite(), ErrorKind::kIo, what + " contains non-finite values");
  return m;
}

inline void write_matrix(std::ostream& out, const Matrix& m, const std::string& indent) {
  out << "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << (i == 0 ? "" : ",") << "\n" << indent << "  [";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << (j == 0 ? "" : ", ") << format_g17(m(i, j));
    }
    out << "]";
  }
  out << "\n" << indent << "]";
}

inline std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

}  // namespace internal

inline ModelDocument parse_model_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::kIo, std::string("model JSON does not parse: ") + e.what());
  }
  require(doc.is_object(), ErrorKind::kIo, "model document must be a JSON object");
  require(doc.contains("modes") && doc["modes"].is_array() && !doc["modes"].empty(),
          ErrorKind::kIo, "model document needs a non-empty \"modes\" array");

  ModelDocument out;
  for (std::size_t i = 0; i < doc["modes"].size(); ++i) {
    const auto& jm = doc["modes"][i];
    const std::string where = "modes[" + std::to_string(i) + "].";
    for (const char* key : {"A", "J", "C", "E"}) {
      require(jm.contains(key), ErrorKind::kIo, where + key + " is missing");
    }
    out.modes.push_back({internal::matrix_from_json(jm["A"], where + "A"),
                         internal::matrix_from_json(jm["J"], where + "J"),
                         internal::matrix_from_json(jm["C"], where + "C"),
                         internal::matrix_from_json(jm["E"], where + "E")});
  }
  validate_modes(out.modes);

  if (doc.contains("transition_matrix") && !doc["transition_matrix"].is_null()) {
    out.transition_matrix = internal::matrix_from_json(doc["transition_matrix"], "transition_matrix");
  }
  if (doc.contains("mode_labels") && !doc["mode_labels"].is_null()) {
    require(doc["mode_labels"].is_array(), ErrorKind::kIo, "mode_labels must be an array");
    for (const auto& label : doc["mode_labels"]) {
      require(label.is_string(), ErrorKind::kIo, "mode_labels entries must be strings");
      out.labels.push_back(label.get<std::string>());
    }
    require(out.labels.size() == out.modes.size(), ErrorKind::kIo,
            "mode_labels must have one entry per mode");
  }
  if (doc.contains("discretization") && !doc["discretization"].is_null()) {
    const auto& d = doc["discretization"];
    require(d.is_object() && d.contains("T") && d["T"].is_number(), ErrorKind::kIo,
            "discretization must be an object with a numeric T");
    const double period = d["T"].get<double>();
    require(std::isfinite(period) && period > 0.0, ErrorKind::kIo, "discretization T must be positive");
    out.sample_period = period;
  }
  return out;
}

inline ModelDocument read_model_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_model_json(buffer.str());
}

/// Serializes a discrete model (no discretization field).
inline std::string model_to_json(const MjlsModel& model) {
  std::ostringstream out;
  out << "{\n  \"modes\": [";
  for (std::size_t i = 0; i < model.n_modes(); ++i) {
    const Mode& m = model.mode(i);
    out << (i == 0 ? "" : ",") << "\n    {";
    const std::pair<const char*, const Matrix*> fields[] = {
        {"A", &m.A}, {"J", &m.J}, {"C", &m.C}, {"E", &m.E}};
    bool first = true;
    for (const auto& [key, mat] : fields) {
      out << (first ? "" : ",") << "\n      \"" << key << "\": ";
      internal::write_matrix(out, *mat, "      ");
      first = false;
    }
    out << "\n    }";
  }
  out << "\n  ],\n  \"transition_matrix\": ";
  internal::write_matrix(out, model.chain().matrix(), "  ");
  if (!model.labels().empty()) {
    out << ",\n  \"mode_labels\": [";
    for (std::size_t i = 0; i < model.labels().size(); ++i) {
      out << (i == 0 ? "" : ", ") << internal::json_string(model.labels()[i]);
    }
    out << "]";
  }
  out << "\n}\n";
  return out.str();
}

/// Certificate export for third-party re-verification.
inline std::string certificate_to_json(const MjlsModel& model, const HinfResult& result) {
  std::ostringstream out;
  const auto& cert = result.certificate;
  out << "{\n";
  out << "  \"gamma\": " << format_g17(cert.gamma) << ",\n";
  out << "  \"norm\": " << format_g17(result.norm) << ",\n";
  out << "  \"gamma_lower\": " << format_g17(result.gamma_lower) << ",\n";
  out << "  \"rel_tol\": " << format_g17(result.tolerance) << ",\n";
  out << "  \"margin\": " << format_g17(cert.margin) << ",\n";
  out << "  \"transition_matrix\": ";
  internal::write_matrix(out, model.chain().matrix(), "  ");
  out << ",\n  \"P\": [";
  for (std::size_t i = 0; i < cert.P.size(); ++i) {
    out << (i == 0 ? "\n    " : ",\n    ");
    internal::write_matrix(out, cert.P[i], "    ");
  }
  out << "\n  ],\n";
  out << "  \"solver\": {\"id\": " << internal::json_string(kSolverId)
      << ", \"bisection_solves\": " << result.iterations
      << ", \"newton_steps_last_feasible\": " << cert.newton_steps << "},\n";
  out << "  \"warnings\": [";
  for (std::size_t i = 0; i < cert.warnings.size(); ++i) {
    out << (i == 0 ? "" : ", ") << internal::json_string(cert.warnings[i]);
  }
  out << "]\n}\n";
  return out.str();
}

/// Reads back the P matrices and gamma of an exported certificate.
inline LmiCertificate parse_certificate_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::kIo, std::string("certificate JSON does not parse: ") + e.what());
  }
  require(doc.contains("gamma") && doc.contains("P") && doc.contains("margin"), ErrorKind::kIo,
          "certificate needs gamma, margin and P");
  LmiCertificate cert;
  cert.gamma = doc["gamma"].get<double>();
  cert.margin = doc["margin"].get<double>();
  for (std::size_t i = 0; i < doc["P"].size(); ++i) {
    cert.P.push_back(internal::matrix_from_json(doc["P"][i], "P[" + std::to_string(i) + "]"));
  }
  return cert;
}

}  // namespace burstnorm
