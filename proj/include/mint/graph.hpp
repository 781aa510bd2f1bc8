#pragma once

#include "mint/common.hpp"
#include "mint/dataset.hpp"

#include <vector>

namespace mint::graph {

enum class LayerAverage {
  kUniform,       // 1/(L+1), LightGCN convention (default)
  kPaperLiteral,  // 1/L with L+1 terms, as printed
};

// D^{-1/2} A D^{-1/2} with the zero-degree convention d^{-1/2} = 0.
// A must be square; symmetry is the caller's contract.
template <typename Scalar>
SpMatT<Scalar> normalize_adjacency(const SpMatT<Scalar>& A) {
  VecT<Scalar> deg = VecT<Scalar>::Zero(A.rows());
  for (int k = 0; k < A.outerSize(); ++k) {
    for (typename SpMatT<Scalar>::InnerIterator it(A, k); it; ++it) {
      deg[it.row()] += it.value();
    }
  }
  VecT<Scalar> dinv(A.rows());
  for (Eigen::Index i = 0; i < deg.size(); ++i) {
    dinv[i] = deg[i] > Scalar(0) ? Scalar(1) / std::sqrt(deg[i]) : Scalar(0);
  }
  SpMatT<Scalar> out = A;
  for (int k = 0; k < out.outerSize(); ++k) {
    for (typename SpMatT<Scalar>::InnerIterator it(out, k); it; ++it) {
      it.valueRef() = it.value() * dinv[it.row()] * dinv[it.col()];
    }
  }
  return out;
}

inline SpMat normalize_adjacency(const BipartiteAdjacency& adj) {
  return normalize_adjacency<double>(adj.to_sparse());
}

template <typename Scalar>
struct PropagatedT {
  std::vector<MatT<Scalar>> per_layer;  // e^(0) .. e^(L)
  MatT<Scalar> averaged;                // e
};

// e^(l) = A_hat e^(l-1) with e^(0) = x; plain linear propagation, no
// transforms, averaged across layers.
template <typename Scalar>
PropagatedT<Scalar> propagate(const MatT<Scalar>& x, const SpMatT<Scalar>& a_hat, int L,
                              LayerAverage avg = LayerAverage::kUniform) {
  if (L < 0) throw MintError("propagate: L must be >= 0");
  if (a_hat.rows() != a_hat.cols() || a_hat.cols() != x.rows()) {
    throw MintError("propagate: shape mismatch between A_hat and x");
  }
  PropagatedT<Scalar> out;
  out.per_layer.reserve(static_cast<std::size_t>(L) + 1);
  out.per_layer.push_back(x);
  for (int l = 1; l <= L; ++l) {
    out.per_layer.push_back(a_hat * out.per_layer.back());
  }
  const Scalar denom = (avg == LayerAverage::kUniform)
                           ? Scalar(L + 1)
                           : Scalar(L == 0 ? 1 : L);
  out.averaged = MatT<Scalar>::Zero(x.rows(), x.cols());
  for (const auto& e : out.per_layer) out.averaged += e;
  out.averaged /= denom;
  return out;
}

using Propagated = PropagatedT<double>;

struct SplitViews {
  Mat e_p;  // one row per seeker, ordered as `seekers`
  Mat e_q;  // one row per helper, ordered as `helpers`
  std::vector<PatientId> seekers;
  std::vector<PatientId> helpers;
  // patient id -> row in e_p / e_q, -1 when the patient lacks the role
  std::vector<int> seeker_row;
  std::vector<int> helper_row;
};

// e has 2m rows: seeker copies first, then helper copies. The views keep
// only the rows of patients that actually hold each role.
SplitViews split_views(const Mat& e, const DynamicSupportGraph& graph);

}  // namespace mint::graph
