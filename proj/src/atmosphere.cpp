#include "atcsim/atmosphere.hpp"

#include "atcsim/errors.hpp"
#include "atcsim/units.hpp"

#include <algorithm>
#include <cmath>

namespace atcsim
{
    namespace
    {
        constexpr double kMu = (isa::kGamma - 1.0) / isa::kGamma;

        double clamp_index_frac(const std::vector<double> &axis, double x, std::size_t &i0)
        {
            if (axis.size() == 1 || x <= axis.front())
            {
                i0 = 0;
                return 0.0;
            }
            if (x >= axis.back())
            {
                i0 = axis.size() - 2;
                return 1.0;
            }
            const auto it = std::upper_bound(axis.begin(), axis.end(), x);
            i0 = static_cast<std::size_t>(it - axis.begin()) - 1;
            return (x - axis[i0]) / (axis[i0 + 1] - axis[i0]);
        }

        void check_axis(const std::vector<double> &axis, const char *name)
        {
            if (axis.empty())
            {
                throw DefinitionError(std::string("wind grid: empty ") + name + " axis");
            }
            for (std::size_t i = 1; i < axis.size(); ++i)
            {
                if (!(axis[i] > axis[i - 1]))
                {
                    throw DefinitionError(std::string("wind grid: ") + name + " axis not strictly ascending");
                }
            }
        }
    }

    AtmosphereState isa_at(double h) noexcept
    {
        using namespace isa;
        AtmosphereState s;
        if (h <= kTropopauseM)
        {
            s.temperature = kT0 + kLapse * h;
            s.pressure = kP0 * std::pow(s.temperature / kT0, -kG0 / (kLapse * kR));
        }
        else
        {
            const double t_trop = kT0 + kLapse * kTropopauseM;
            const double p_trop = kP0 * std::pow(t_trop / kT0, -kG0 / (kLapse * kR));
            s.temperature = t_trop;
            s.pressure = p_trop * std::exp(-kG0 / (kR * t_trop) * (h - kTropopauseM));
        }
        s.density = s.pressure / (kR * s.temperature);
        s.speed_of_sound = std::sqrt(kGamma * kR * s.temperature);
        return s;
    }

    double cas_to_tas_ms(double cas, double h) noexcept
    {
        using namespace isa;
        const AtmosphereState a = isa_at(h);
        const double qc = kP0 * (std::pow(1.0 + kMu / 2.0 * kRho0 / kP0 * cas * cas, 1.0 / kMu) - 1.0);
        return std::sqrt(2.0 / kMu * a.pressure / a.density * (std::pow(1.0 + qc / a.pressure, kMu) - 1.0));
    }

    double tas_to_cas_ms(double tas, double h) noexcept
    {
        using namespace isa;
        const AtmosphereState a = isa_at(h);
        const double qc = a.pressure * (std::pow(1.0 + kMu / 2.0 * a.density / a.pressure * tas * tas, 1.0 / kMu) - 1.0);
        return std::sqrt(2.0 / kMu * kP0 / kRho0 * (std::pow(1.0 + qc / kP0, kMu) - 1.0));
    }

    double mach_to_tas_ms(double mach, double h) noexcept { return mach * isa_at(h).speed_of_sound; }

    double tas_to_mach(double tas, double h) noexcept { return tas / isa_at(h).speed_of_sound; }

    double cas_to_tas(double cas_kt, double fl)
    {
        if (!(cas_kt > 0.0 && cas_kt < 400.0) || !(fl >= 0.0 && fl <= 600.0))
        {
            throw DomainError("cas_to_tas: cas must be in (0, 400) kt and fl in [0, 600]");
        }
        return ms_to_knots(cas_to_tas_ms(knots_to_ms(cas_kt), fl_to_m(fl)));
    }

    double tas_to_cas(double tas_kt, double fl)
    {
        if (!(tas_kt > 0.0) || !(fl >= 0.0 && fl <= 600.0))
        {
            throw DomainError("tas_to_cas: tas must be positive and fl in [0, 600]");
        }
        return ms_to_knots(tas_to_cas_ms(knots_to_ms(tas_kt), fl_to_m(fl)));
    }

    double crossover_fl(double cas_kt, double mach)
    {
        const double cas = knots_to_ms(cas_kt);
        // Negative below the crossover: the CAS schedule's TAS rises with altitude while the
        // Mach schedule's TAS falls (or stays flat above the tropopause).
        const auto gap = [&](double fl) {
            const double h = fl_to_m(fl);
            return cas_to_tas_ms(cas, h) - mach_to_tas_ms(mach, h);
        };
        double lo = 0.0;
        double hi = kMaxFl;
        if (gap(lo) >= 0.0 || gap(hi) < 0.0)
        {
            return kMaxFl;
        }
        while (hi - lo > 0.01)
        {
            const double mid = 0.5 * (lo + hi);
            if (gap(mid) < 0.0)
            {
                lo = mid;
            }
            else
            {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    }

    SpeedState speed_state_from_tas(double tas_kt, double fl, SpeedRegime regime)
    {
        const double h = fl_to_m(fl);
        const double tas = knots_to_ms(tas_kt);
        return SpeedState{ms_to_knots(tas_to_cas_ms(tas, h)), tas_to_mach(tas, h), tas_kt, regime};
    }

    void WindGrid::validate() const
    {
        check_axis(lat_axis, "lat");
        check_axis(lon_axis, "lon");
        check_axis(fl_axis, "fl");
        const std::size_t n = lat_axis.size() * lon_axis.size() * fl_axis.size();
        if (u.size() != n || v.size() != n)
        {
            throw DefinitionError("wind grid: u/v sizes do not match the lattice (" + std::to_string(n) + " nodes)");
        }
        for (std::size_t i = 0; i < n; ++i)
        {
            if (!std::isfinite(u[i]) || !std::isfinite(v[i]))
            {
                throw DefinitionError("wind grid: non-finite value at node " + std::to_string(i));
            }
        }
    }

    WindGrid WindGrid::uniform(double u_ms, double v_ms, WindRole role)
    {
        WindGrid g;
        g.lat_axis = {-90.0};
        g.lon_axis = {-180.0};
        g.fl_axis = {0.0};
        g.u = {u_ms};
        g.v = {v_ms};
        g.role = role;
        return g;
    }

    WindVector wind_at(const WindGrid &g, double lat, double lon, double fl, double /*t*/)
    {
        if (g.u.empty())
        {
            throw DefinitionError("wind grid: empty");
        }
        std::size_t i = 0;
        std::size_t j = 0;
        std::size_t k = 0;
        const double fi = clamp_index_frac(g.lat_axis, lat, i);
        const double fj = clamp_index_frac(g.lon_axis, lon, j);
        const double fk = clamp_index_frac(g.fl_axis, fl, k);
        const std::size_t ni = g.lat_axis.size() > 1 ? 1 : 0;
        const std::size_t nj = g.lon_axis.size() > 1 ? 1 : 0;
        const std::size_t nk = g.fl_axis.size() > 1 ? 1 : 0;
        WindVector out;
        for (std::size_t di = 0; di <= ni; ++di)
        {
            const double wi = ni == 0 ? 1.0 : (di == 0 ? 1.0 - fi : fi);
            for (std::size_t dj = 0; dj <= nj; ++dj)
            {
                const double wj = nj == 0 ? 1.0 : (dj == 0 ? 1.0 - fj : fj);
                for (std::size_t dk = 0; dk <= nk; ++dk)
                {
                    const double wk = nk == 0 ? 1.0 : (dk == 0 ? 1.0 - fk : fk);
                    const double w = wi * wj * wk;
                    if (w == 0.0)
                    {
                        continue;
                    }
                    const std::size_t idx = g.index(i + di, j + dj, k + dk);
                    out.u += w * g.u[idx];
                    out.v += w * g.v[idx];
                }
            }
        }
        return out;
    }

    WindField::WindField(std::vector<WindGrid> grids, WindRole role) : m_grids(std::move(grids)), m_role(role)
    {
        std::stable_sort(m_grids.begin(), m_grids.end(),
                         [](const WindGrid &a, const WindGrid &b) { return a.valid_from_s < b.valid_from_s; });
        for (auto &g : m_grids)
        {
            g.validate();
            if (g.role != role)
            {
                throw DefinitionError("wind field: grid role does not match field role " + to_string(role));
            }
        }
    }

    const WindGrid *WindField::active(double t) const noexcept
    {
        const WindGrid *current = m_grids.empty() ? nullptr : &m_grids.front();
        for (const auto &g : m_grids)
        {
            if (g.valid_from_s <= t)
            {
                current = &g;
            }
        }
        return current;
    }

    WindVector WindField::at(double lat, double lon, double fl, double t) const
    {
        const WindGrid *g = active(t);
        return g == nullptr ? WindVector{} : wind_at(*g, lat, lon, fl, t);
    }

    GroundVector ground_vector(double tas_kt, double heading_deg, WindVector wind)
    {
        const double h = heading_deg * kDegToRad;
        const double north = tas_kt * std::cos(h) + ms_to_knots(wind.v);
        const double east = tas_kt * std::sin(h) + ms_to_knots(wind.u);
        return {std::hypot(north, east), wrap_360(std::atan2(east, north) * kRadToDeg)};
    }

    std::string to_string(WindRole role) { return role == WindRole::truth ? "truth" : "forecast"; }
}
