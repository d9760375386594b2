#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "faultlens/http.hpp"

namespace faultlens {

/// Similarity between a generated explanation and a human reference, in [0, 1].
class ExplanationScorer {
 public:
  virtual ~ExplanationScorer() = default;
  virtual std::string name() const = 0;
  virtual double score(const std::string& candidate, const std::string& reference) = 0;

  /// Scores several pairs; the default loops over score().
  virtual std::vector<double> score_batch(
      const std::vector<std::pair<std::string, std::string>>& pairs);
};

/// Token-level F1 over normalised tokens. Text is lower-cased (ASCII) and
/// split into maximal runs of letters and digits; everything else separates
/// tokens. Overlap counts repeated tokens up to their multiplicity in both
/// texts. Two empty texts score 1, one empty text scores 0. Symmetric.
class LexicalScorer final : public ExplanationScorer {
 public:
  std::string name() const override { return "lexical"; }
  double score(const std::string& candidate, const std::string& reference) override;

  static std::vector<std::string> tokenize(const std::string& text);
};

/// Delegates to an HTTP similarity service (for example a learned metric server).
/// Wire format: POST {"pairs": [{"candidate", "reference"}]} -> {"scores": [real]}.
/// Returned scores are clamped to [0, 1].
class RemoteScorer final : public ExplanationScorer {
 public:
  RemoteScorer(std::string url, std::shared_ptr<HttpTransport> transport)
      : url_(std::move(url)), transport_(std::move(transport)) {}

  std::string name() const override { return "remote"; }
  double score(const std::string& candidate, const std::string& reference) override;
  std::vector<double> score_batch(
      const std::vector<std::pair<std::string, std::string>>& pairs) override;

 private:
  std::string url_;
  std::shared_ptr<HttpTransport> transport_;
};

}  // namespace faultlens
