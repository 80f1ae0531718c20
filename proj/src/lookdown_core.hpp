#pragma once

// Event mechanics shared by the non-spatial and spatial lookdowns.  An individual
// type only needs `level` and `ty` members.

#include <algorithm>
#include <limits>
#include <vector>

#include "lfv/lookdown.hpp"

namespace lfv::detail {

template <class Ind>
std::size_t first_above(const std::vector<Ind>& v, double x) {
    auto it = std::upper_bound(v.begin(), v.end(), x, [](double a, const Ind& b) { return a < b.level; });
    return static_cast<std::size_t>(it - v.begin());
}

template <class Ind>
std::size_t parent_index_neutral(const std::vector<Ind>& v, double v_star) {
    return first_above(v, v_star);
}

/** argmin of (l - v*)/sigma(type, zeta) over l > v*; ties go to the lower level. */
template <class Ind>
std::size_t parent_index_selective(const std::vector<Ind>& v, double v_star, int zeta, const SelectionSpec& spec) {
    const std::size_t n = v.size();
    const double smax = std::max(spec.sigma(Type::Rare, zeta), spec.sigma(Type::Common, zeta));
    std::size_t best = n;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = first_above(v, v_star); i < n; ++i) {
        const double gap = v[i].level - v_star;
        if (gap / smax >= best_ratio) break;
        const double ratio = gap / spec.sigma(v[i].ty, zeta);
        if (ratio < best_ratio) {
            best_ratio = ratio;
            best = i;
        }
    }
    return best;
}

template <class Ind>
void insertion_sort(std::vector<Ind>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i].level < v[i - 1].level)) continue;
        Ind x = v[i];
        std::size_t j = i;
        while (j > 0 && x.level < v[j - 1].level) {
            v[j] = v[j - 1];
            --j;
        }
        v[j] = x;
    }
}

template <class Ind>
std::size_t drop_above(std::vector<Ind>& v, double ceiling) {
    const std::size_t keep = first_above(v, ceiling);
    const std::size_t dead = v.size() - keep;
    v.resize(keep);
    return dead;
}

/** Offspring all above the ceiling: the tracked levels are thinned by 1/(1-u). */
template <class Ind>
EventStats thin_all(std::vector<Ind>& v, double ceiling, double impact) {
    EventStats st;
    st.empty_draw = true;
    st.untracked_parent = true;
    const double scale = 1.0 / (1.0 - impact);
    for (auto& x : v) x.level *= scale;
    st.deaths = drop_above(v, ceiling);
    return st;
}

/**
 * Remap a sorted configuration through one reproduction event with the given
 * ascending offspring levels.  `make_child(level, type, j)` builds offspring j.
 */
template <class Ind, class MakeChild>
EventStats apply_core(std::vector<Ind>& v, double ceiling, EventKind kind, const std::vector<double>& offspring,
                      double impact, int zeta, const SelectionSpec& spec, std::vector<Ind>& scratch,
                      MakeChild&& make_child) {
    EventStats st;
    st.offspring = offspring.size();
    const std::size_t n = v.size();
    const double v_star = offspring.front();
    const double scale = 1.0 / (1.0 - impact);

    const std::size_t p = kind == EventKind::Neutral ? parent_index_neutral(v, v_star)
                                                     : parent_index_selective(v, v_star, zeta, spec);
    Type parent_type = Type::Common;
    if (p < n) {
        parent_type = v[p].ty;
        const double l_star = v[p].level;
        const double gap = l_star - v_star;
        std::size_t out = 0;
        if (kind == EventKind::Neutral) {
            for (std::size_t i = 0; i < n; ++i) {
                if (i == p) continue;
                Ind x = v[i];
                x.level = x.level < l_star ? x.level * scale : (x.level - gap) * scale;
                v[out++] = x;
            }
            v.resize(out);
        } else {
            const double sp = spec.sigma(parent_type, zeta);
            const double shift_rare = gap * spec.sigma(Type::Rare, zeta) / sp;
            const double shift_common = gap * spec.sigma(Type::Common, zeta) / sp;
            for (std::size_t i = 0; i < n; ++i) {
                if (i == p) continue;
                Ind x = v[i];
                if (x.level > v_star) {
                    x.level = (x.level - (x.ty == Type::Rare ? shift_rare : shift_common)) * scale;
                    if (x.level < 0.0) {
                        x.level = 0.0;
                        ++st.clamped;
                    }
                } else {
                    x.level *= scale;
                }
                v[out++] = x;
            }
            v.resize(out);
            insertion_sort(v);
        }
    } else {
        st.untracked_parent = true;
        for (auto& x : v) x.level *= scale;
    }

    scratch.clear();
    scratch.reserve(v.size() + offspring.size());
    std::size_t i = 0, j = 0;
    while (i < v.size() || j < offspring.size()) {
        if (j == offspring.size() || (i < v.size() && v[i].level <= offspring[j])) {
            scratch.push_back(v[i++]);
        } else {
            scratch.push_back(make_child(offspring[j], parent_type, j));
            ++j;
        }
    }
    v.swap(scratch);
    st.deaths = drop_above(v, ceiling);
    return st;
}

}  // namespace lfv::detail
