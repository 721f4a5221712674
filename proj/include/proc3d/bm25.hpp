#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace proc3d {

class EmptyCorpus : public std::invalid_argument {
 public:
  EmptyCorpus() : std::invalid_argument("BM25 index needs at least one document") {}
};

/// Lowercased alphanumeric runs; everything else separates terms.
std::vector<std::string> bm25_terms(std::string_view text);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Okapi BM25 over an inverted index. Immutable after construction.
///   idf(t)     = ln(1 + (N - n_t + 0.5) / (n_t + 0.5))
///   score(d,q) = sum over query terms t (repeats included, in query order) of
///                idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |d| / avgdl))
class Bm25Index {
 public:
  explicit Bm25Index(const std::vector<std::string>& documents, Bm25Params params = {});

  std::size_t size() const { return doc_len_.size(); }
  const Bm25Params& params() const { return params_; }
  double average_length() const { return avgdl_; }
  double idf(std::string_view term) const;

  /// Score of every document, in corpus order.
  std::vector<double> scores(std::string_view query) const;

  /// Indices of the top-k documents by score, ties broken by corpus order. Documents that
  /// share no term with the query still rank (score 0) so k results come back whenever the
  /// corpus is large enough.
  std::vector<std::size_t> retrieve(std::string_view query, std::size_t k = 20) const;

 private:
  struct Posting {
    std::uint32_t doc;
    std::uint32_t tf;
  };
  Bm25Params params_;
  std::vector<std::uint32_t> doc_len_;
  double avgdl_ = 0;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
};

}  // namespace proc3d
