#pragma once

// Plain-text policy files: a header line, `key value` attributes and named
// matrices written at full precision so a save/load round trip is exact.
//
//   spidr-policy 1
//   kind gaussian
//   features pointgoal-v1
//   matrix weights 2 23
//   <row> ...

#include "spidr/cmdp.hpp"
#include "spidr/solve/gaussian_policy.hpp"
#include "spidr/solve/softmax_policy.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace spidr {

struct PolicyFile {
  std::map<std::string, std::string> attributes;
  std::map<std::string, Eigen::MatrixXd> matrices;

  [[nodiscard]] const std::string& attribute(const std::string& key) const {
    const auto it = attributes.find(key);
    if (it == attributes.end()) throw std::runtime_error("policy file: missing attribute '" + key + "'");
    return it->second;
  }

  [[nodiscard]] const Eigen::MatrixXd& matrix(const std::string& key) const {
    const auto it = matrices.find(key);
    if (it == matrices.end()) throw std::runtime_error("policy file: missing matrix '" + key + "'");
    return it->second;
  }
};

inline void write_policy_file(std::ostream& os, const PolicyFile& file) {
  os << "spidr-policy 1\n";
  for (const auto& [key, value] : file.attributes) os << key << ' ' << value << '\n';
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& [key, m] : file.matrices) {
    os << "matrix " << key << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? " " : "") << m(r, c);
      os << '\n';
    }
  }
}

inline PolicyFile read_policy_file(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "spidr-policy 1") throw std::runtime_error("policy file: bad header");
  PolicyFile file;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream head(line);
    std::string key;
    head >> key;
    if (key != "matrix") {
      std::string value;
      std::getline(head >> std::ws, value);
      file.attributes[key] = value;
      continue;
    }
    std::string name;
    Eigen::Index rows = -1;
    Eigen::Index cols = -1;
    if (!(head >> name >> rows >> cols) || rows < 0 || cols < 0)
      throw std::runtime_error("policy file: malformed matrix header on line " + std::to_string(line_no));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (!std::getline(is, line)) throw std::runtime_error("policy file: truncated matrix '" + name + "'");
      ++line_no;
      std::istringstream row(line);
      for (Eigen::Index c = 0; c < cols; ++c)
        if (!(row >> m(r, c))) throw std::runtime_error("policy file: bad value on line " + std::to_string(line_no));
    }
    file.matrices[name] = std::move(m);
  }
  return file;
}

inline PolicyFile to_policy_file(const TabularPolicy& pi, const SoftmaxTabularPolicy* logits = nullptr) {
  PolicyFile file;
  file.attributes["kind"] = "tabular";
  file.matrices["probs"] = pi.probs;
  if (logits != nullptr && logits->logits.size() > 0) file.matrices["logits"] = logits->logits;
  return file;
}

inline PolicyFile to_policy_file(const LinearGaussianPolicy& policy) {
  PolicyFile file;
  file.attributes["kind"] = "gaussian";
  file.attributes["features"] = policy.features.id;
  std::ostringstream bound;
  bound << std::setprecision(std::numeric_limits<double>::max_digits10) << policy.action_bound;
  file.attributes["action_bound"] = bound.str();
  file.matrices["weights"] = policy.weights;
  file.matrices["log_std"] = policy.log_std;
  return file;
}

inline TabularPolicy tabular_from_file(const PolicyFile& file) {
  if (file.attribute("kind") != "tabular") throw std::runtime_error("policy file: not a tabular policy");
  return {file.matrix("probs")};
}

/// `features` must be the map the policy was trained with; its id is checked.
inline LinearGaussianPolicy gaussian_from_file(const PolicyFile& file, FeatureMap features) {
  if (file.attribute("kind") != "gaussian") throw std::runtime_error("policy file: not a gaussian policy");
  if (file.attribute("features") != features.id)
    throw std::runtime_error("policy file: feature map '" + file.attribute("features") + "' does not match '" +
                             features.id + "'");
  LinearGaussianPolicy p;
  p.weights = file.matrix("weights");
  p.log_std = file.matrix("log_std");
  if (p.weights.cols() != features.size || p.log_std.size() != p.weights.rows())
    throw std::runtime_error("policy file: weight shape does not match the feature map");
  p.action_bound = std::stod(file.attribute("action_bound"));
  p.features = std::move(features);
  return p;
}

inline void save_policy(const std::string& path, const PolicyFile& file) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_policy_file(os, file);
}

inline PolicyFile load_policy(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_policy_file(is);
}

}  // namespace spidr
