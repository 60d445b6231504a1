// baseline.hpp
//
// Filter-list blocking as a request classifier: a request is predicted
// positive when its own host (not its CNAME) matches the list.  This is
// what a blocker without DNS access can do.

#pragma once

#include <span>
#include <vector>

#include "cnamecloak/domain.hpp"
#include "cnamecloak/filterlist.hpp"
#include "cnamecloak/labeler.hpp"
#include "cnamecloak/learn/metrics.hpp"

namespace cnamecloak::learn {

inline std::vector<int> baseline_predictions(std::span<const std::string> urls, const filter_list& list) {
  std::vector<int> out;
  out.reserve(urls.size());
  for (const auto& u : urls) out.push_back(list.match_domain(url_host(u)) ? 1 : 0);
  return out;
}

inline metrics baseline_filterlist(std::span<const std::string> urls, std::span<const int> labels,
                                   const filter_list& list) {
  return score_predictions(baseline_predictions(urls, list), labels);
}

inline metrics baseline_filterlist(const std::vector<labeled_request>& requests, const filter_list& list) {
  std::vector<std::string> urls;
  std::vector<int> labels;
  for (const auto& r : requests) {
    urls.push_back(r.request.url);
    labels.push_back(r.label ? 1 : 0);
  }
  return baseline_filterlist(urls, labels, list);
}

}  // namespace cnamecloak::learn
