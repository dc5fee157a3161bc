#include "atcsim/trajectory.hpp"

#include <stdexcept>

namespace atcsim
{
    std::string to_string(Phase p)
    {
        return p == Phase::climb ? "climb" : "descent";
    }

    Phase phase_from_string(const std::string &s)
    {
        if (s == "climb")
        {
            return Phase::climb;
        }
        if (s == "descent")
        {
            return Phase::descent;
        }
        throw std::invalid_argument("unknown phase '" + s + "'");
    }
}
