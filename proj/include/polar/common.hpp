#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace polar {

enum class errc {
    on_prime_sphere,
    on_polar_sphere,
    chart_domain,
    evaluation_failure,
    invariance_violated,
    not_c1,
    bad_argument,
    regular_value_not_found,
    preimage_search_incomplete,
    sampling_cap_exceeded,
    boundary_zero_suspected,
    depth_cap_exceeded,
    tracking_loss,
    degenerate_transversal_degree,
    box_cap_exceeded,
    spectral_gap_too_small,
    nonsingular_jacobian,
    not_a_fixed_point,
    radius_collapse,
    continuum_suspected,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::on_prime_sphere: return "OnPrimeSphere";
        case errc::on_polar_sphere: return "OnPolarSphere";
        case errc::chart_domain: return "ChartDomain";
        case errc::evaluation_failure: return "EvaluationFailure";
        case errc::invariance_violated: return "InvarianceViolated";
        case errc::not_c1: return "NotC1";
        case errc::bad_argument: return "BadArgument";
        case errc::regular_value_not_found: return "RegularValueNotFound";
        case errc::preimage_search_incomplete: return "PreimageSearchIncomplete";
        case errc::sampling_cap_exceeded: return "SamplingCapExceeded";
        case errc::boundary_zero_suspected: return "BoundaryZeroSuspected";
        case errc::depth_cap_exceeded: return "DepthCapExceeded";
        case errc::tracking_loss: return "TrackingLoss";
        case errc::degenerate_transversal_degree: return "DegenerateTransversalDegree";
        case errc::box_cap_exceeded: return "BoxCapExceeded";
        case errc::spectral_gap_too_small: return "SpectralGapTooSmall";
        case errc::nonsingular_jacobian: return "NonSingularJacobian";
        case errc::not_a_fixed_point: return "NotAFixedPoint";
        case errc::radius_collapse: return "RadiusCollapse";
        case errc::continuum_suspected: return "ContinuumSuspected";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
    errc code() const { return code_; }

private:
    errc code_;
};

// splitmix64; fixed across platforms so seeded runs are reproducible bytes.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    // Independent substream: same seed + distinct purpose never collide in practice.
    Rng(std::uint64_t seed, const std::string& purpose) : state(seed ^ fnv1a(purpose)) {
        next();  // decorrelate from the raw seed
    }

    static std::uint64_t fnv1a(const std::string& s) {
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        return h;
    }

    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform() { return (next() >> 11) * 0x1.0p-53; }  // [0,1)
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    // Box-Muller without cached spare: stateless per call pair, deterministic.
    double normal() {
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }
};

// Runs f(i) for i in [0,n). Work items must be independent; callers own any
// output slots, so results are identical for every jobs value.
template <class F>
void parallel_for(int jobs, std::size_t n, F&& f) {
    if (jobs < 1) jobs = 1;
    if (jobs == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::size_t nthreads = std::min<std::size_t>(jobs, n);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    std::exception_ptr first_error;
    std::mutex err_mu;
    for (std::size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += nthreads) f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace polar
