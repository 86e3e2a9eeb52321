// Copyright (c) 2026 lgm-sv authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LGM_EVALUATION_HPP_
#define LGM_EVALUATION_HPP_

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "lgm/common.hpp"

namespace lgm {

// Decision rule everywhere in this module: accept iff score >= threshold
// (ties accept). Fixed so golden files stay stable.

struct Trial {
  bool target = false;
  std::string enroll_id;
  std::string test_id;
};

struct ScoredTrial {
  Trial trial;
  double score = 0.0;
};

struct ScoreSet {
  std::vector<ScoredTrial> items;

  void add(bool target, std::string enroll_id, std::string test_id,
           double score) {
    check_numeric(std::isfinite(score), "score set: non-finite score");
    items.push_back({{target, std::move(enroll_id), std::move(test_id)}, score});
  }

  std::size_t num_targets() const {
    std::size_t n = 0;
    for (const auto& s : items) n += s.trial.target ? 1 : 0;
    return n;
  }
};

struct DetPoint {
  double threshold = 0.0;
  double far = 0.0;  // false-accept rate: nontargets scoring >= threshold
  double frr = 0.0;  // false-reject rate: targets scoring < threshold
};

namespace detail {

struct SplitScores {
  std::vector<double> targets;     // sorted ascending
  std::vector<double> nontargets;  // sorted ascending
};

inline SplitScores split_and_sort(const ScoreSet& scores) {
  SplitScores s;
  for (const auto& item : scores.items)
    (item.trial.target ? s.targets : s.nontargets).push_back(item.score);
  std::sort(s.targets.begin(), s.targets.end());
  std::sort(s.nontargets.begin(), s.nontargets.end());
  return s;
}

inline double far_at(const SplitScores& s, double threshold) {
  const auto it = std::lower_bound(s.nontargets.begin(), s.nontargets.end(),
                                   threshold);
  return static_cast<double>(s.nontargets.end() - it) /
         static_cast<double>(s.nontargets.size());
}

inline double frr_at(const SplitScores& s, double threshold) {
  const auto it =
      std::lower_bound(s.targets.begin(), s.targets.end(), threshold);
  return static_cast<double>(it - s.targets.begin()) /
         static_cast<double>(s.targets.size());
}

inline std::vector<double> distinct_thresholds(const SplitScores& s) {
  std::vector<double> t;
  t.reserve(s.targets.size() + s.nontargets.size());
  t.insert(t.end(), s.targets.begin(), s.targets.end());
  t.insert(t.end(), s.nontargets.begin(), s.nontargets.end());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

}  // namespace detail

// Operating points at every distinct score threshold, plus a final
// reject-everything point. FAR is non-increasing and FRR non-decreasing as
// the threshold rises; the point at the lowest score is the accept-all
// corner (FAR 1, FRR 0).
inline std::vector<DetPoint> det_points(const ScoreSet& scores) {
  const auto s = detail::split_and_sort(scores);
  check_data(!s.targets.empty() && !s.nontargets.empty(),
             "det: need at least one target and one nontarget trial");
  std::vector<DetPoint> points;
  for (double t : detail::distinct_thresholds(s))
    points.push_back({t, detail::far_at(s, t), detail::frr_at(s, t)});
  points.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});
  return points;
}

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
  // Interpolation-free value at the best swept operating point, exported for
  // comparison against the exhaustive-sweep oracle.
  double eer_step = 0.0;
  double threshold_step = 0.0;
};

// Equal error rate: sweep all distinct thresholds and linearly interpolate
// in (FAR, FRR) between the adjacent operating points where FAR - FRR
// changes sign. The step value is min over swept points of max(FAR, FRR).
inline EerResult eer(const ScoreSet& scores) {
  const auto points = det_points(scores);

  EerResult r;
  r.eer_step = std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    const double worst = std::max(p.far, p.frr);
    if (worst < r.eer_step) {
      r.eer_step = worst;
      r.threshold_step = p.threshold;
    }
  }

  // FAR - FRR is non-increasing along the sweep and goes from +1-ish to -1.
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double gap = points[i].far - points[i].frr;
    if (gap == 0.0) {
      r.eer = points[i].far;
      r.threshold = points[i].threshold;
      return r;
    }
    if (gap < 0.0) {
      check_data(i > 0, "eer: sweep starts past the crossing");
      const double prev_gap = points[i - 1].far - points[i - 1].frr;
      const double u = prev_gap / (prev_gap - gap);
      r.eer = points[i - 1].far + u * (points[i].far - points[i - 1].far);
      r.threshold = std::isinf(points[i].threshold)
                        ? points[i - 1].threshold
                        : points[i - 1].threshold +
                              u * (points[i].threshold - points[i - 1].threshold);
      return r;
    }
  }
  throw DataError("eer: no crossing found");
}

struct AccResult {
  double acc = 0.0;
  double threshold = 0.0;
};

// Best-threshold accuracy: maximum over all thresholds of the fraction of
// correct decisions. Among ties the highest decision boundary wins; the
// reported threshold is the midpoint of the score gap containing that
// boundary, so any threshold in the gap reproduces the accuracy.
inline AccResult acc(const ScoreSet& scores) {
  check_data(!scores.items.empty(), "acc: empty score set");
  const auto s = detail::split_and_sort(scores);
  const std::size_t total = scores.items.size();
  const auto thresholds = detail::distinct_thresholds(s);

  // Counting stays in integers so results are exact count ratios.
  auto correct_at = [&](double t) -> std::size_t {
    const std::size_t accepted_targets =
        s.targets.end() -
        std::lower_bound(s.targets.begin(), s.targets.end(), t);
    const std::size_t rejected_nontargets =
        std::lower_bound(s.nontargets.begin(), s.nontargets.end(), t) -
        s.nontargets.begin();
    return accepted_targets + rejected_nontargets;
  };

  std::size_t best_correct = 0;
  AccResult best;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    const std::size_t c = correct_at(thresholds[i]);
    if (c >= best_correct) {
      best_correct = c;
      best.threshold = i == 0 ? thresholds[i] - 1.0
                              : 0.5 * (thresholds[i - 1] + thresholds[i]);
    }
  }
  // Reject-everything boundary above the top score.
  if (s.nontargets.size() >= best_correct) {
    best_correct = s.nontargets.size();
    best.threshold = thresholds.back() + 1.0;
  }
  best.acc = static_cast<double>(best_correct) / static_cast<double>(total);
  return best;
}

}  // namespace lgm

#endif  // LGM_EVALUATION_HPP_
