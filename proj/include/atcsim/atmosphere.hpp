#pragma once

#include <string>
#include <vector>

namespace atcsim
{
    namespace isa
    {
        inline constexpr double kT0 = 288.15;     // K
        inline constexpr double kP0 = 101325.0;   // Pa
        inline constexpr double kR = 287.05287;   // J/(kg K)
        inline constexpr double kGamma = 1.4;
        inline constexpr double kLapse = -0.0065; // K/m, below the tropopause
        inline constexpr double kTropopauseM = 11000.0;
        inline constexpr double kRho0 = kP0 / (kR * kT0);
    }

    struct AtmosphereState
    {
        double pressure = 0.0;       // Pa
        double density = 0.0;        // kg/m^3
        double temperature = 0.0;    // K
        double speed_of_sound = 0.0; // m/s
    };

    /// ISA at geopotential altitude h (m); standard lapse to 11 km, isothermal above.
    AtmosphereState isa_at(double altitude_m) noexcept;

    // Unchecked SI conversions used inside the integrator (m/s, m).
    double cas_to_tas_ms(double cas_ms, double altitude_m) noexcept;
    double tas_to_cas_ms(double tas_ms, double altitude_m) noexcept;
    double mach_to_tas_ms(double mach, double altitude_m) noexcept;
    double tas_to_mach(double tas_ms, double altitude_m) noexcept;

    /// CAS -> TAS in knots via the compressible ISA relation. Requires 0 < cas < 400, 0 <= fl <= 600.
    double cas_to_tas(double cas_kt, double fl);
    double tas_to_cas(double tas_kt, double fl);

    /// FL at which the CAS schedule's TAS meets the Mach schedule's TAS (bisection to 0.01 FL).
    /// Returns 600 when the Mach is not reached below FL600.
    double crossover_fl(double cas_kt, double mach);

    enum class SpeedRegime
    {
        cas_governed,
        mach_governed,
    };

    struct SpeedState
    {
        double cas_kt = 0.0;
        double mach = 0.0;
        double tas_kt = 0.0;
        SpeedRegime regime = SpeedRegime::cas_governed;
    };

    /// Consistent speed triple from a TAS at a given FL.
    SpeedState speed_state_from_tas(double tas_kt, double fl, SpeedRegime regime);

    enum class WindRole
    {
        forecast,
        truth,
    };

    struct WindVector
    {
        double u = 0.0; // east component, m/s
        double v = 0.0; // north component, m/s
    };

    /// Regular lattice of wind vectors, values stored row-major as [lat][lon][fl].
    struct WindGrid
    {
        std::vector<double> lat_axis;
        std::vector<double> lon_axis;
        std::vector<double> fl_axis;
        std::vector<double> u;
        std::vector<double> v;
        WindRole role = WindRole::forecast;
        double valid_from_s = 0.0;

        void validate() const;
        std::size_t index(std::size_t i, std::size_t j, std::size_t k) const
        {
            return (i * lon_axis.size() + j) * fl_axis.size() + k;
        }
        static WindGrid uniform(double u_ms, double v_ms, WindRole role);
    };

    /// Trilinear interpolation, clamped to the lattice hull. Grids are time-invariant snapshots.
    WindVector wind_at(const WindGrid &grid, double lat, double lon, double fl, double t = 0.0);

    /// Timestamped sequence of snapshots of one role with step changes at valid_from_s boundaries.
    class WindField
    {
    public:
        WindField() = default;
        WindField(std::vector<WindGrid> grids, WindRole role);

        WindRole role() const noexcept { return m_role; }
        bool empty() const noexcept { return m_grids.empty(); }
        const std::vector<WindGrid> &grids() const noexcept { return m_grids; }
        const WindGrid *active(double t) const noexcept;

        /// Calm air when the field is empty.
        WindVector at(double lat, double lon, double fl, double t) const;

    private:
        std::vector<WindGrid> m_grids;
        WindRole m_role = WindRole::forecast;
    };

    struct GroundVector
    {
        double ground_speed_kt = 0.0;
        double track_deg = 0.0;
    };

    GroundVector ground_vector(double tas_kt, double heading_deg, WindVector wind);

    std::string to_string(WindRole role);
}
