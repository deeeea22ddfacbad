#include "fedsim/benchmark/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedsim/error.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/util/sha256.hpp"

namespace fedsim::bench {

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::regression:
      return "regression";
    case TaskKind::classification:
      return "classification";
    case TaskKind::quadratic:
      return "quadratic";
  }
  return "?";
}

std::size_t Dataset::num_samples() const {
  return qp ? qp->num_components() : targets.size();
}

std::vector<std::size_t> Dataset::labels() const {
  if (kind != TaskKind::classification) throw UnsupportedError("dataset has no class labels");
  std::vector<std::size_t> out(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) out[i] = static_cast<std::size_t>(targets[i]);
  return out;
}

void Dataset::validate() const {
  const std::size_t n = num_samples();
  if (kind == TaskKind::quadratic) {
    if (!qp) throw LoadError("quadratic dataset without QP specification");
  } else {
    if (features.rows() != targets.size()) throw LoadError("features and targets differ in length");
    for (double v : features.data()) {
      if (!std::isfinite(v)) throw LoadError("non-finite feature value");
    }
  }
  if (kind == TaskKind::classification) {
    for (double t : targets) {
      if (t < 0 || t >= static_cast<double>(num_classes) || t != std::floor(t)) {
        throw LoadError("classification target outside [0, num_classes)");
      }
    }
  }
  if (owner_ids && owner_ids->size() != n) throw LoadError("owner ids do not cover every sample");
  std::vector<char> seen(n, 0);
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (std::size_t i : *part) {
      if (i >= n || seen[i]) throw LoadError("dataset splits overlap or are out of range");
      seen[i] = 1;
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw LoadError("dataset splits do not cover every sample");
  }
}

Split seeded_split(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_stream(seed, StreamTag::split);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_val = n / 10;
  const std::size_t n_test = n / 10;
  const std::size_t n_train = n - n_val - n_test;
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

std::string content_hash(const Dataset& d) {
  util::Sha256 h;
  h.update(d.name).update("\0kind:").update(to_string(d.kind));
  h.update_u64(d.features.rows()).update_u64(d.features.cols());
  for (double v : d.features.data()) h.update_f64(v);
  h.update_u64(d.targets.size());
  for (double v : d.targets) h.update_f64(v);
  h.update_u64(d.num_classes);
  h.update_u64(d.feature_names.size());
  for (const auto& f : d.feature_names) h.update(f).update_u64(f.size());
  for (const auto* part : {&d.split.train, &d.split.val, &d.split.test}) {
    h.update_u64(part->size());
    for (std::size_t i : *part) h.update_u64(i);
  }
  if (d.owner_ids) {
    h.update("owners").update_u64(d.owner_ids->size());
    for (const auto& o : *d.owner_ids) h.update(o).update_u64(o.size());
  }
  if (d.qp) {
    h.update("qp").update_u64(d.qp->dim).update_u64(d.qp->num_components());
    for (const auto& a : d.qp->a) {
      for (double v : a.data()) h.update_f64(v);
    }
    for (const auto& b : d.qp->b) {
      for (double v : b) h.update_f64(v);
    }
  }
  return h.hex_digest();
}

}  // namespace fedsim::bench
