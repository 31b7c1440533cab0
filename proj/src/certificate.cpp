#include "uryforge/certificate.hpp"

#include "uryforge/json.hpp"

namespace uryforge {

Json IndependenceCertificate::to_json() const {
  Json j;
  j["relation"] = "indep";
  j["A"] = A;
  j["B"] = B;
  j["C"] = C;
  auto rows = Json::array();
  for (const auto& w : witnesses) rows.push_back({w[0], w[1], w[2]});
  j["witnesses"] = rows;
  j["verdict"] = verdict;
  if (missing_pair) j["missing"] = {(*missing_pair)[0], (*missing_pair)[1]};
  if (!violating_tuple.empty()) j["violating_tuple"] = violating_tuple;
  return j;
}

IndependenceCertificate IndependenceCertificate::from_json(const Json& j) {
  IndependenceCertificate c;
  c.A = j.at("A").get<std::vector<std::string>>();
  c.B = j.at("B").get<std::vector<std::string>>();
  c.C = j.at("C").get<std::vector<std::string>>();
  for (const auto& row : j.at("witnesses")) {
    c.witnesses.push_back({row.at(0).get<std::string>(), row.at(1).get<std::string>(),
                           row.at(2).get<std::string>()});
  }
  c.verdict = j.at("verdict").get<bool>();
  if (j.contains("missing")) {
    c.missing_pair = {{j["missing"].at(0).get<std::string>(),
                       j["missing"].at(1).get<std::string>()}};
  }
  if (j.contains("violating_tuple")) {
    c.violating_tuple = j["violating_tuple"].get<std::vector<std::string>>();
  }
  return c;
}

Json PairIndependenceCertificate::to_json() const {
  Json j;
  j["relation"] = "pair_indep";
  j["left"] = left.to_json();
  j["right"] = right.to_json();
  j["verdict"] = verdict;
  return j;
}

PairIndependenceCertificate PairIndependenceCertificate::from_json(const Json& j) {
  PairIndependenceCertificate c;
  c.left = IndependenceCertificate::from_json(j.at("left"));
  c.right = IndependenceCertificate::from_json(j.at("right"));
  c.verdict = j.at("verdict").get<bool>();
  return c;
}

}  // namespace uryforge
