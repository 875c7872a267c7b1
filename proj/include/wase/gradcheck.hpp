#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "wase/params.hpp"
#include "wase/rng.hpp"

namespace wase {

struct GradCheckOptions {
    // Coordinates sampled per parameter tensor; central differences over
    // every coordinate of a full model would be prohibitive.
    std::size_t max_coords_per_param = 16;
    // Separate budget for coordinates whose AD gradient is exactly zero
    // (off-path parameters): two function evaluations buy only a zero==0
    // comparison there, so per-loss checks may spend less on them.
    std::size_t max_zero_coords_per_param = SIZE_MAX;
    std::uint64_t seed = 0;
    // Multiplier on the machine-epsilon rounding model of the estimator.
    // Forward passes accumulate eps-level error over many operations, so
    // the bound needs headroom over a single rounding step.
    double noise_safety = 256.0;
};

struct GradCheckReport {
    struct Entry {
        std::string parameter;
        double max_rel_error = 0.0;
        std::size_t coords_checked = 0;
        std::size_t coords_skipped = 0;
        std::size_t coords_at_noise_floor = 0;
    };
    std::vector<Entry> per_parameter;
    double max_rel_error = 0.0;
    std::string worst_parameter;
    std::size_t coords_checked = 0;
    std::size_t coords_skipped = 0;
    std::size_t coords_at_noise_floor = 0;

    bool passed(double tol) const { return max_rel_error <= tol; }

    std::vector<std::string> offenders(double tol) const {
        std::vector<std::string> out;
        for (const auto& e : per_parameter) {
            if (e.max_rel_error > tol) out.push_back(e.parameter);
        }
        return out;
    }
};

// Central-difference check of backward() gradients.
//
// loss_fn must rebuild the same deterministic scalar loss from the
// store's current values on the tape it is given. Coordinates whose
// evaluations pass near a non-smooth point (tape kink flag) are skipped.
// Relative error per coordinate: |g_ad - g_fd| / max(1e-8, |g_ad|+|g_fd|).
//
// A coordinate whose AD/FD difference sits within the provable rounding
// bound of the central-difference estimator, eps * (|f+| + |f-|) / (2h),
// is unverifiable in double precision (near-zero gradients of a large
// loss); it counts as consistent rather than as an error. An actually
// wrong gradient differs by the gradient's own scale and is still caught.
inline GradCheckReport finite_diff_check(const std::function<Var(Tape&)>& loss_fn,
                                         ParameterStore& store, double step, double tol,
                                         GradCheckOptions options = {}) {
    if (!(step > 0.0)) throw Error("finite_diff_check: step must be > 0");
    (void)tol;  // thresholds are reported, not enforced

    store.zero_grads();
    Tape tape;
    Var loss = loss_fn(tape);
    backward(tape, loss, store);
    const bool center_kink = tape.kink_observed();

    std::map<std::string, Tensor> ad;
    for (const auto& [name, g] : store.all()) ad.emplace(name, store.grad(name));

    Rng rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
    GradCheckReport report;
    for (const auto& [name, p] : store.all()) {
        GradCheckReport::Entry entry;
        entry.parameter = name;
        Tensor& theta = store.value(name);
        std::vector<std::size_t> live, zero;
        for (std::size_t i = 0; i < theta.numel(); ++i) {
            (ad.at(name)[i] != 0.0 ? live : zero).push_back(i);
        }
        const std::size_t zero_budget =
            std::min(options.max_zero_coords_per_param, options.max_coords_per_param);
        if (live.size() > options.max_coords_per_param) {
            rng.shuffle(live);
            live.resize(options.max_coords_per_param);
        }
        if (zero.size() > zero_budget) {
            rng.shuffle(zero);
            zero.resize(zero_budget);
        }
        std::vector<std::size_t> coords = std::move(live);
        coords.insert(coords.end(), zero.begin(), zero.end());
        std::sort(coords.begin(), coords.end());
        for (std::size_t c : coords) {
            const double orig = theta[c];
            theta[c] = orig + step;
            Tape tp;
            const double up = tp.scalar_value(loss_fn(tp));
            const bool kink_up = tp.kink_observed();
            theta[c] = orig - step;
            Tape tm;
            const double down = tm.scalar_value(loss_fn(tm));
            const bool kink_down = tm.kink_observed();
            theta[c] = orig;
            if (center_kink || kink_up || kink_down) {
                entry.coords_skipped += 1;
                continue;
            }
            const double fd = (up - down) / (2.0 * step);
            const double adv = ad.at(name)[c];
            const double noise_bound = options.noise_safety *
                                       std::numeric_limits<double>::epsilon() *
                                       (std::fabs(up) + std::fabs(down)) / (2.0 * step);
            entry.coords_checked += 1;
            if (std::fabs(adv - fd) <= noise_bound) {
                entry.coords_at_noise_floor += 1;
                continue;
            }
            const double rel = std::fabs(adv - fd) / std::max(1e-8, std::fabs(adv) + std::fabs(fd));
            entry.max_rel_error = std::max(entry.max_rel_error, rel);
        }
        report.coords_checked += entry.coords_checked;
        report.coords_skipped += entry.coords_skipped;
        report.coords_at_noise_floor += entry.coords_at_noise_floor;
        if (entry.max_rel_error > report.max_rel_error) {
            report.max_rel_error = entry.max_rel_error;
            report.worst_parameter = name;
        }
        report.per_parameter.push_back(std::move(entry));
    }
    store.zero_grads();
    return report;
}

}  // namespace wase
