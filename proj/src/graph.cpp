#include "mint/graph.hpp"

namespace mint::graph {

SplitViews split_views(const Mat& e, const DynamicSupportGraph& graph) {
  if (e.rows() != 2 * graph.m) throw MintError("split_views: e must have 2m rows");
  SplitViews sv;
  sv.seekers = graph.seekers;
  sv.helpers = graph.helpers;
  sv.seeker_row.assign(static_cast<std::size_t>(graph.m), -1);
  sv.helper_row.assign(static_cast<std::size_t>(graph.m), -1);
  sv.e_p.resize(static_cast<Eigen::Index>(sv.seekers.size()), e.cols());
  sv.e_q.resize(static_cast<Eigen::Index>(sv.helpers.size()), e.cols());
  for (std::size_t k = 0; k < sv.seekers.size(); ++k) {
    sv.e_p.row(static_cast<Eigen::Index>(k)) = e.row(sv.seekers[k]);
    sv.seeker_row[static_cast<std::size_t>(sv.seekers[k])] = static_cast<int>(k);
  }
  for (std::size_t k = 0; k < sv.helpers.size(); ++k) {
    sv.e_q.row(static_cast<Eigen::Index>(k)) = e.row(graph.m + sv.helpers[k]);
    sv.helper_row[static_cast<std::size_t>(sv.helpers[k])] = static_cast<int>(k);
  }
  return sv;
}

}  // namespace mint::graph
