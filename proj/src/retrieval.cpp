#include "agmh/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <chrono>

namespace agmh {

PackedCode pack(std::span<const std::int8_t> u) {
  PackedCode c;
  c.nbits = static_cast<std::uint32_t>(u.size());
  c.words.assign((u.size() + 63) / 64, 0);
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (u[j] == 1) {
      c.words[j / 64] |= std::uint64_t{1} << (j % 64);
    } else if (u[j] != -1) {
      throw ArgumentError("pack: entry " + std::to_string(j) + " is " +
                          std::to_string(static_cast<int>(u[j])) + ", expected ±1");
    }
  }
  return c;
}

std::vector<std::int8_t> unpack(const PackedCode& c) {
  std::vector<std::int8_t> u(c.nbits);
  for (std::size_t j = 0; j < u.size(); ++j) {
    u[j] = (c.words[j / 64] >> (j % 64)) & 1 ? 1 : -1;
  }
  return u;
}

int hamming(const PackedCode& a, const PackedCode& b) {
  if (a.nbits != b.nbits) {
    throw ArgumentError("hamming: code widths disagree, " + std::to_string(a.nbits) +
                        " vs " + std::to_string(b.nbits));
  }
  int d = 0;
  for (std::size_t w = 0; w < a.words.size(); ++w) {
    d += std::popcount(a.words[w] ^ b.words[w]);
  }
  return d;
}

void CodeDatabase::validate() const {
  if (ids.size() != codes.size() || labels.size() != codes.size()) {
    throw ArgumentError("code database: parallel arrays of unequal length");
  }
  for (const PackedCode& c : codes) {
    if (c.nbits != nbits) {
      throw ArgumentError("code database: mixed code widths " + std::to_string(c.nbits) +
                          " vs " + std::to_string(nbits));
    }
  }
}

std::vector<std::size_t> rank(const PackedCode& query, const CodeDatabase& db) {
  if (db.size() == 0) throw ArgumentError("rank: empty code database");
  std::vector<int> dist(db.size());
  for (std::size_t i = 0; i < db.size(); ++i) dist[i] = hamming(query, db.codes[i]);
  std::vector<std::size_t> order(db.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  return order;
}

double mean_average_precision(std::span<const QueryCode> queries, const CodeDatabase& db) {
  if (queries.empty()) throw ArgumentError("mean_average_precision: no queries");
  db.validate();
  double sum_ap = 0.0;
  for (const QueryCode& q : queries) {
    const std::vector<std::size_t> order = rank(q.code, db);
    std::size_t relevant = 0;
    for (std::size_t i = 0; i < db.size(); ++i) {
      if (db.ids[i] != q.id && db.labels[i] == q.label) ++relevant;
    }
    if (relevant == 0) {
      throw ArgumentError("mean_average_precision: query id " + std::to_string(q.id) +
                          " has no relevant database items");
    }
    double ap = 0.0;
    std::size_t pos = 0, hits = 0;
    for (std::size_t idx : order) {
      if (db.ids[idx] == q.id) continue;  // self-hit
      ++pos;
      if (db.labels[idx] == q.label) {
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(pos);
      }
    }
    sum_ap += ap / static_cast<double>(relevant);
  }
  return sum_ap / static_cast<double>(queries.size());
}

std::vector<BenchRow> bench(const CodeDatabase& db, std::span<const Tensor> queries,
                            const std::function<PackedCode(const Tensor&)>& encoder,
                            int repeats) {
  if (queries.empty()) throw ArgumentError("bench: no query features");
  if (repeats < 1) throw ArgumentError("bench: repeats must be positive");
  std::vector<BenchRow> rows;
  for (const int batch : {1, 4, 16, 64}) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < repeats; ++r) {
      for (int b = 0; b < batch; ++b) {
        const Tensor& q = queries[static_cast<std::size_t>(b) % queries.size()];
        const PackedCode code = encoder(q);
        volatile std::size_t sink = rank(code, db).front();
        (void)sink;
      }
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    rows.push_back({batch, ms / (static_cast<double>(repeats) * batch)});
  }
  return rows;
}

}  // namespace agmh
