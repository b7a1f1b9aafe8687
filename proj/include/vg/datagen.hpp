// Synthetic spike-and-slab regression benchmark generator.
//
// Teacher weights are zero with probability 1 - rho_data and otherwise
// uniform on (1, w_bar) with a random sign, w_bar = sqrt(12/rho - 3/4) - 1/2.
// Inputs are i.i.d. standard normal and the noise variance is calibrated
// analytically so that sum(w*^2) / var(noise) equals the requested SNR.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "vg/core.hpp"
#include "vg/linalg.hpp"
#include "vg/rng.hpp"

namespace vg {

enum class DensityMode { exact_count, binomial };

struct SpikeSlabSpec {
    Eigen::Index n_features = 256;
    Eigen::Index n_samples = 256;
    double rho_data = 0.125;
    double snr = 3.0;
    std::uint64_t seed = 0;
    DensityMode density_mode = DensityMode::exact_count;
};

// Upper bound of the slab magnitude range.
inline double slab_upper_bound(double rho_data) {
    return std::sqrt(12.0 / rho_data - 0.75) - 0.5;
}

// Second moment of |w| for w uniform on (1, w_bar): (w_bar^2 + w_bar + 1)/3.
inline double slab_second_moment(double rho_data) {
    const double wb = slab_upper_bound(rho_data);
    return (wb * wb + wb + 1.0) / 3.0;
}

inline void validate_spec(const SpikeSlabSpec& spec) {
    if (spec.n_features < 1 || spec.n_samples < 1)
        throw InvalidInput("spike-slab spec: sizes must be positive");
    if (!(spec.rho_data > 0.0) || spec.rho_data > 1.0)
        throw InvalidInput("spike-slab spec: rho_data must lie in (0, 1]");
    if (!(spec.snr > 0.0)) throw InvalidInput("spike-slab spec: snr must be positive");
}

inline GroundTruth sample_teacher_weights(const SpikeSlabSpec& spec, Rng& rng) {
    validate_spec(spec);
    const Eigen::Index n = spec.n_features;
    const double wb = slab_upper_bound(spec.rho_data);

    GroundTruth truth;
    truth.rho_data = spec.rho_data;
    truth.w_star = Vector::Zero(n);
    truth.s_star.assign(static_cast<std::size_t>(n), 0);

    auto draw_slab = [&]() {
        const double mag = rng.uniform(1.0, wb);
        return rng.uniform() < 0.5 ? mag : -mag;
    };

    if (spec.density_mode == DensityMode::exact_count) {
        const auto k = static_cast<std::size_t>(
            std::llround(spec.rho_data * static_cast<double>(n)));
        for (std::size_t i : rng.choose(static_cast<std::size_t>(n), k)) {
            truth.w_star(static_cast<Eigen::Index>(i)) = draw_slab();
            truth.s_star[i] = 1;
        }
    } else {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (rng.uniform() < spec.rho_data) {
                truth.w_star(i) = draw_slab();
                truth.s_star[static_cast<std::size_t>(i)] = 1;
            }
        }
    }
    return truth;
}

// Draws x ~ N(0,1)^(M x N), y = x w* + noise, then centers empirically.
// The const overload never mutates the teacher, so a fixed teacher can be
// shared read-only across concurrent ensemble members.
inline Dataset generate_dataset(const GroundTruth& truth, Eigen::Index m_samples, Rng& rng,
                                double snr = 3.0) {
    if (m_samples < 1) throw InvalidInput("generate_dataset: M must be positive");
    const Eigen::Index n = truth.w_star.size();

    const double signal_power = truth.w_star.squaredNorm();
    const double sigma_xi = std::sqrt(signal_power / snr);

    Dataset d;
    d.x.resize(m_samples, n);
    for (Eigen::Index mu = 0; mu < m_samples; ++mu)
        for (Eigen::Index i = 0; i < n; ++i) d.x(mu, i) = rng.normal();

    d.y = d.x * truth.w_star;
    if (sigma_xi > 0.0)
        for (Eigen::Index mu = 0; mu < m_samples; ++mu) d.y(mu) += sigma_xi * rng.normal();

    center_in_place(d.x, d.y);
    d.centered = true;
    return d;
}

// Mutable overload records the calibrated noise level on the teacher.
inline Dataset generate_dataset(GroundTruth& truth, Eigen::Index m_samples, Rng& rng,
                                double snr = 3.0) {
    truth.noise_std = std::sqrt(truth.w_star.squaredNorm() / snr);
    return generate_dataset(static_cast<const GroundTruth&>(truth), m_samples, rng, snr);
}

}  // namespace vg
