#include "atcsim/perf.hpp"

#include "atcsim/errors.hpp"
#include "atcsim/json_io.hpp"
#include "atcsim/units.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace atcsim
{
    namespace
    {
        PerfCoefficients make(std::string type, double mass, double area, double ct1, double ct2, double ct3,
                              double cd0, double cd2, double cas_low, double cas_high, double mach, double des,
                              double sfc)
        {
            PerfCoefficients p;
            p.aircraft_type = std::move(type);
            p.mass_ref_kg = mass;
            p.wing_area_m2 = area;
            p.ct1_n = ct1;
            p.ct2_ft = ct2;
            p.ct3_per_ft2 = ct3;
            p.cd0 = cd0;
            p.cd2 = cd2;
            p.base_cas_schedule = {{0.0, cas_low}, {100.0, cas_low}, {110.0, cas_high}, {600.0, cas_high}};
            p.base_mach = mach;
            p.descent_thrust_factor = des;
            p.sfc_proxy = sfc;
            return p;
        }
    }

    void PerfCoefficients::validate() const
    {
        const auto fail = [&](const std::string &what) {
            throw DefinitionError("perf coefficients " + aircraft_type + ": " + what);
        };
        if (aircraft_type.empty())
        {
            throw DefinitionError("perf coefficients: missing aircraft type");
        }
        if (!(mass_ref_kg > 0 && wing_area_m2 > 0 && ct1_n > 0 && ct2_ft > 0 && ct3_per_ft2 > 0 && cd0 > 0 &&
              cd2 > 0 && base_mach > 0 && sfc_proxy > 0))
        {
            fail("all coefficients must be positive");
        }
        if (!(descent_thrust_factor > 0.0 && descent_thrust_factor < 1.0))
        {
            fail("descent_thrust_factor must be in (0, 1)");
        }
        if (base_cas_schedule.size() < 2 || base_cas_schedule.front().first > 0.0 ||
            base_cas_schedule.back().first < kMaxFl)
        {
            fail("base CAS schedule must cover FL0..FL600");
        }
        for (std::size_t i = 0; i < base_cas_schedule.size(); ++i)
        {
            if (!(base_cas_schedule[i].second > 0.0))
            {
                fail("base CAS schedule values must be positive");
            }
            if (i > 0 && !(base_cas_schedule[i].first > base_cas_schedule[i - 1].first))
            {
                fail("base CAS schedule FLs must be strictly ascending");
            }
        }
        for (double fl = 0.0; fl <= kMaxFl; fl += 10.0)
        {
            if (!(max_climb_thrust(fl_to_m(fl)) > 0.0))
            {
                fail("thrust not positive at FL" + std::to_string(static_cast<int>(fl)));
            }
        }
    }

    double PerfCoefficients::base_cas_at(double fl) const
    {
        const auto &s = base_cas_schedule;
        if (fl <= s.front().first)
        {
            return s.front().second;
        }
        if (fl >= s.back().first)
        {
            return s.back().second;
        }
        const auto it = std::upper_bound(s.begin(), s.end(), fl,
                                         [](double x, const std::pair<double, double> &p) { return x < p.first; });
        const auto &hi = *it;
        const auto &lo = *(it - 1);
        return lo.second + (fl - lo.first) * (hi.second - lo.second) / (hi.first - lo.first);
    }

    double PerfCoefficients::max_climb_thrust(double altitude_m) const
    {
        const double h = altitude_m / kFootToM;
        return ct1_n * (1.0 - h / ct2_ft + ct3_per_ft2 * h * h);
    }

    double PerfCoefficients::drag(double tas_ms, double density) const
    {
        const double qs = 0.5 * density * tas_ms * tas_ms * wing_area_m2;
        const double cl = mass_ref_kg * kG0 / qs;
        return qs * (cd0 + cd2 * cl * cl);
    }

    const std::vector<PerfCoefficients> &builtin_perf_tables()
    {
        // Synthetic magnitudes, one representative per class.
        static const std::vector<PerfCoefficients> tables = {
            make("B738", 65300, 124.65, 146590, 53872, 4.0e-11, 0.025452, 0.035815, 250, 290, 0.78, 0.045, 1.65e-5),
            make("A320", 64000, 122.6, 136000, 52000, 5.8e-11, 0.0240, 0.0375, 250, 300, 0.78, 0.045, 1.60e-5),
            make("A333", 185000, 361.6, 480000, 55000, 4.0e-11, 0.0190, 0.0460, 250, 300, 0.82, 0.040, 1.55e-5),
            make("B77W", 300000, 436.8, 800000, 56000, 3.5e-11, 0.0205, 0.0450, 250, 310, 0.84, 0.040, 1.50e-5),
            make("E190", 45000, 92.5, 105000, 48000, 8.5e-11, 0.0240, 0.0400, 250, 290, 0.78, 0.045, 1.70e-5),
            make("DH8D", 26000, 63.1, 70000, 40000, 1.55e-10, 0.0280, 0.0400, 220, 240, 0.60, 0.060, 1.20e-5),
        };
        return tables;
    }

    const PerfCoefficients &builtin_perf(std::string_view aircraft_type)
    {
        for (const auto &p : builtin_perf_tables())
        {
            if (p.aircraft_type == aircraft_type)
            {
                return p;
            }
        }
        throw DefinitionError("no performance coefficients for aircraft type " + std::string(aircraft_type));
    }

    std::vector<PerfCoefficients> load_perf_file(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw DefinitionError("cannot open performance file " + path);
        }
        nlohmann::json j;
        try
        {
            in >> j;
        }
        catch (const nlohmann::json::exception &e)
        {
            throw DefinitionError("performance file " + path + ": " + e.what());
        }
        if (j.value("format", "") != "atcsim-perf" || j.value("version", 0) != 1)
        {
            throw DefinitionError("performance file " + path + ": expected format atcsim-perf version 1");
        }
        std::vector<PerfCoefficients> out;
        for (const auto &t : j.at("types"))
        {
            PerfCoefficients p = perf_from_json(t);
            p.validate();
            out.push_back(std::move(p));
        }
        return out;
    }

    void save_perf_file(const std::string &path, const std::vector<PerfCoefficients> &tables)
    {
        nlohmann::json j;
        j["format"] = "atcsim-perf";
        j["version"] = 1;
        j["types"] = nlohmann::json::array();
        for (const auto &p : tables)
        {
            j["types"].push_back(to_json(p));
        }
        std::ofstream out(path);
        out << j.dump(2) << '\n';
    }
}
