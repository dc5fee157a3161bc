#include "atcsim/aircraft.hpp"

namespace atcsim
{
    std::string to_string(Source s)
    {
        return s == Source::replay ? "replay" : "simulated";
    }

    std::string to_string(VerticalMode m)
    {
        switch (m)
        {
        case VerticalMode::level:
            return "level";
        case VerticalMode::climbing:
            return "climbing";
        case VerticalMode::descending:
            return "descending";
        }
        return "level";
    }
}
