#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <tuple>

#include <fftw3.h>

#include "llbar/grid.hpp"

namespace llbar::detail {

using cplx = std::complex<double>;

// Cache of FFTW plans for three interleaved components (component
// innermost, stride 3). Plans are built once with FFTW_ESTIMATE, which keeps
// the chosen algorithm, and hence the output bits, independent of timing.
// fftw_execute_dft on distinct arrays is thread safe; only planning is
// serialized.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    void forward(const Grid& g, const cplx* in, cplx* out) { execute(g, FFTW_FORWARD, in, out); }
    void backward(const Grid& g, const cplx* in, cplx* out) { execute(g, FFTW_BACKWARD, in, out); }

    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

private:
    PlanCache() = default;
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    void execute(const Grid& g, int sign, const cplx* in, cplx* out) {
        fftw_plan plan = lookup(g, sign);
        // fftw's new-array interface takes a non-const input pointer but does
        // not write to it for out-of-place plans.
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                         reinterpret_cast<fftw_complex*>(out));
    }

    fftw_plan lookup(const Grid& g, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_tuple(g.dim(), g.n(), sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;

        int dims[3] = {g.n(), g.n(), g.n()};
        const std::size_t count = 3 * g.size();
        auto* a = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count));
        auto* b = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count));
        fftw_plan plan = fftw_plan_many_dft(g.dim(), dims, 3, a, nullptr, 3, 1, b, nullptr, 3, 1, sign,
                                            FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(a);
        fftw_free(b);
        plans_.emplace(key, plan);
        return plan;
    }

    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

}  // namespace llbar::detail
