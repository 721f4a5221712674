#include "proc3d/bm25.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace proc3d {

std::vector<std::string> bm25_terms(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Bm25Index::Bm25Index(const std::vector<std::string>& documents, Bm25Params params) : params_(params) {
  if (documents.empty()) throw EmptyCorpus();
  doc_len_.reserve(documents.size());
  double total = 0;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    const auto terms = bm25_terms(documents[d]);
    doc_len_.push_back(static_cast<std::uint32_t>(terms.size()));
    total += static_cast<double>(terms.size());
    std::unordered_map<std::string, std::uint32_t> tf;
    for (const auto& t : terms) ++tf[t];
    for (auto& [term, count] : tf) postings_[term].push_back({static_cast<std::uint32_t>(d), count});
  }
  avgdl_ = total / static_cast<double>(documents.size());
}

double Bm25Index::idf(std::string_view term) const {
  auto it = postings_.find(std::string(term));
  const double n = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
  const double big_n = static_cast<double>(doc_len_.size());
  return std::log(1.0 + (big_n - n + 0.5) / (n + 0.5));
}

std::vector<double> Bm25Index::scores(std::string_view query) const {
  std::vector<double> s(doc_len_.size(), 0.0);
  const double k1 = params_.k1, b = params_.b;
  for (const auto& term : bm25_terms(query)) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double w = idf(term);
    for (const auto& p : it->second) {
      const double tf = p.tf;
      const double norm = k1 * (1.0 - b + b * static_cast<double>(doc_len_[p.doc]) / avgdl_);
      s[p.doc] += w * (tf * (k1 + 1.0)) / (tf + norm);
    }
  }
  return s;
}

std::vector<std::size_t> Bm25Index::retrieve(std::string_view query, std::size_t k) const {
  const auto s = scores(query);
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) { return s[a] != s[b] ? s[a] > s[b] : a < b; });
  order.resize(k);
  return order;
}

}  // namespace proc3d
