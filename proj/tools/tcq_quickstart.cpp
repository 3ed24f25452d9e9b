// Minimal library walk-through at the reference preset: regime diagnostics,
// the partition-function decomposition and the first-order photon shifts.

#include <cstdio>

#include "tcq/tcq.hpp"

int main() {
    const double temp = tcq::kReferencePreset.temp_kelvin;
    const auto p = tcq::reference_params(100);

    const auto r = tcq::regime_report(p, temp);
    std::printf("T_c(n=100)          %.4f K\n", r.t_cutoff);
    std::printf("N_c(T=0.3 K)        %.0f\n", r.n_critical.value);

    const auto z = tcq::z_pert(p, temp);
    std::printf("log Z0              %.12f\n", z.log_z0);
    std::printf("Z_pert / Z0         %.6e (bound %.2e)\n", z.ratio, z.error_bound);
    std::printf("blocks summed       %zu, k in [%ld, %ld]\n", z.truncation.blocks, z.truncation.k_min,
                z.truncation.k_max);

    const auto s = tcq::shifts(p, temp);
    std::printf("photon mean shift   %.6e\n", s.fractional_mean_shift);
    std::printf("photon var shift    %.6e\n", s.fractional_variance_shift);
    std::printf("jz shift            %.6e rad/s\n", p.omega0 * s.jz_shift);

    const auto c = tcq::oracle_compare(tcq::reference_params(16), temp);
    std::printf("oracle n=16         residual %.2e <= bound %.2e: %s\n", c.residual, c.error_bound,
                c.residual <= c.error_bound ? "yes" : "no");
    return c.residual <= c.error_bound ? 0 : 1;
}
