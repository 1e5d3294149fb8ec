#include "mixsel/metrics.hpp"

#include <map>
#include <vector>

#include "mixsel/error.hpp"

namespace mixsel {

namespace {

double pairs(double m) { return 0.5 * m * (m - 1.0); }

std::vector<int> dense_labels(std::span<const int> labels, int& classes) {
  std::map<int, int> index;
  for (int l : labels) index.emplace(l, 0);
  classes = 0;
  for (auto& [label, slot] : index) slot = classes++;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(index[l]);
  return out;
}

}  // namespace

double ari(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "partitions differ in length");
  int ra = 0;
  int rb = 0;
  const std::vector<int> la = dense_labels(a, ra);
  const std::vector<int> lb = dense_labels(b, rb);
  std::vector<double> table(static_cast<std::size_t>(ra) * static_cast<std::size_t>(rb), 0.0);
  std::vector<double> rows(static_cast<std::size_t>(ra), 0.0);
  std::vector<double> cols(static_cast<std::size_t>(rb), 0.0);
  for (std::size_t i = 0; i < la.size(); ++i) {
    table[static_cast<std::size_t>(la[i]) * static_cast<std::size_t>(rb) + static_cast<std::size_t>(lb[i])] += 1.0;
    rows[static_cast<std::size_t>(la[i])] += 1.0;
    cols[static_cast<std::size_t>(lb[i])] += 1.0;
  }
  double index = 0.0;
  for (double c : table) index += pairs(c);
  double sum_rows = 0.0;
  for (double c : rows) sum_rows += pairs(c);
  double sum_cols = 0.0;
  for (double c : cols) sum_cols += pairs(c);
  const double total = pairs(static_cast<double>(la.size()));
  if (total == 0.0) return 1.0;
  const double expected = sum_rows * sum_cols / total;
  const double maximum = 0.5 * (sum_rows + sum_cols);
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

double ari(const HardPartition& a, const HardPartition& b) { return ari(std::span<const int>(a.z), std::span<const int>(b.z)); }

}  // namespace mixsel
