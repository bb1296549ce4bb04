#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "bernstab/agn.hpp"
#include "bernstab/bernstein.hpp"
#include "bernstab/cauchy.hpp"
#include "bernstab/charfn.hpp"
#include "bernstab/distribution.hpp"

namespace bernstab {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Parsing throws ConfigError with the offending path in the message.
Vec vec_from_json(const json& j, const std::string& where);
Mat mat_from_json(const json& j, const std::string& where);
Distribution distribution_from_json(const json& j, const std::string& where = "distribution");
JointPair pair_from_json(const json& j, const std::string& where = "pair");

ojson to_json(const Vec& v);
ojson to_json(const Mat& m);
ojson to_json(const CVec& v);  // [[re, im], ...]
ojson to_json(const Distribution& d);
ojson to_json(const JointPair& p);

ojson to_json(const DependenceReport& r);
ojson to_json(const Lemma3Report& r);
ojson to_json(const StabilityBudget& b);
ojson to_json(const GaussianSurrogate& s);
ojson to_json(const ExtensionReport& r);
ojson to_json(const EntropyBounds& b);
ojson to_json(const EntropyAuditReport& r);
ojson to_json(const AdditiveFit& f);
ojson to_json(const BiadditiveFit& f);
ojson to_json(const P2PGap& g);
ojson to_json(const DoublingAudit& a);
ojson to_json(const ProductDegrade& p);
ojson to_json(const VLambdaResult& v);
ojson to_json(const HighProbSet& h);
ojson to_json(const ChallengeReport& r);  // summary only; rows go to CSV

// RFC 4180: CRLF line ends, fields with comma, quote or line break are
// quoted and inner quotes doubled.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_row(std::vector<std::string> row);
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  std::string str() const;

  static std::string field(double x);  // shortest round-trip form
  static std::string field(long long x) { return std::to_string(x); }
  static std::string quote(const std::string& s);

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace bernstab
