#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace atcsim
{
    /// Altitude-dependent parameters of one aircraft type in total-energy-model form.
    ///
    /// The bundled tables are synthetic stand-ins with plausible magnitudes; they are not
    /// licensed reference data. Real coefficient sets in the same JSON layout can be loaded
    /// with load_perf_file().
    struct PerfCoefficients
    {
        std::string aircraft_type;
        double mass_ref_kg = 0.0;
        double wing_area_m2 = 0.0;
        double ct1_n = 0.0;       // max climb thrust at sea level
        double ct2_ft = 0.0;      // linear altitude decay
        double ct3_per_ft2 = 0.0; // quadratic term
        double cd0 = 0.0;
        double cd2 = 0.0;
        /// Piecewise-linear (FL, CAS kt) breakpoints covering [0, 600].
        std::vector<std::pair<double, double>> base_cas_schedule;
        double base_mach = 0.0;
        double descent_thrust_factor = 0.0;
        double sfc_proxy = 0.0; // kg / (N s)

        void validate() const;

        double base_cas_at(double fl) const;
        /// T_base(h) = ct1 (1 - h/ct2 + ct3 h^2), h in feet.
        double max_climb_thrust(double altitude_m) const;
        /// D = 1/2 rho v^2 S (cd0 + cd2 CL^2) with CL from the level-flight lift balance.
        double drag(double tas_ms, double density) const;
    };

    const std::vector<PerfCoefficients> &builtin_perf_tables();

    /// Bundled coefficients for a type; throws DefinitionError for unknown types.
    const PerfCoefficients &builtin_perf(std::string_view aircraft_type);

    std::vector<PerfCoefficients> load_perf_file(const std::string &path);
    void save_perf_file(const std::string &path, const std::vector<PerfCoefficients> &tables);
}
