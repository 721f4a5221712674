#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace proc3d::testgen {

// Naive per-document scorer with its own tokenizer.
struct BruteForceOkapi {
  std::vector<std::vector<std::string>> docs;
  double avgdl = 0;
  mutable std::map<std::string, double> df;

  static std::vector<std::string> terms(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      } else if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
  }

  explicit BruteForceOkapi(const std::vector<std::string>& corpus) {
    double total = 0;
    for (const auto& d : corpus) {
      docs.push_back(terms(d));
      total += static_cast<double>(docs.back().size());
    }
    avgdl = total / static_cast<double>(docs.size());
  }

  double score(const std::string& query, std::size_t d) const {
    const double n_docs = static_cast<double>(docs.size());
    double s = 0;
    for (const auto& t : terms(query)) {
      auto [it, fresh] = df.try_emplace(t, 0.0);
      if (fresh)
        for (const auto& doc : docs) it->second += std::count(doc.begin(), doc.end(), t) > 0 ? 1 : 0;
      const double n = it->second;
      const double tf = static_cast<double>(std::count(docs[d].begin(), docs[d].end(), t));
      if (tf == 0) continue;
      const double idf = std::log(1 + (n_docs - n + 0.5) / (n + 0.5));
      s += idf * tf * 2.2 / (tf + 1.2 * (0.25 + 0.75 * static_cast<double>(docs[d].size()) / avgdl));
    }
    return s;
  }

  std::vector<std::size_t> top(const std::string& query, std::size_t k) const {
    std::vector<std::size_t> idx(docs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> sc(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) sc[d] = score(query, d);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return sc[a] > sc[b]; });
    idx.resize(std::min(k, idx.size()));
    return idx;
  }
};

}  // namespace proc3d::testgen
