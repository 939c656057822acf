#include "cohimpact/units.hpp"

#include <string>

#include "cohimpact/errors.hpp"

namespace cohimpact::units {

Unit parse_unit(std::string_view text) {
  if (text == "cm^-1" || text == "cm-1" || text == "1/cm") return Unit::wavenumber;
  if (text == "rad/ps") return Unit::rad_per_ps;
  if (text == "ps^-1" || text == "ps-1" || text == "1/ps") return Unit::per_ps;
  if (text == "fs^-1" || text == "fs-1" || text == "1/fs") return Unit::per_fs;
  if (text == "fs") return Unit::fs;
  if (text == "ps") return Unit::ps;
  if (text == "K") return Unit::kelvin;
  throw ConfigError("unknown unit '" + std::string(text) + "'");
}

std::string_view unit_name(Unit u) {
  switch (u) {
    case Unit::wavenumber: return "cm^-1";
    case Unit::rad_per_ps: return "rad/ps";
    case Unit::per_ps: return "ps^-1";
    case Unit::per_fs: return "fs^-1";
    case Unit::fs: return "fs";
    case Unit::ps: return "ps";
    case Unit::kelvin: return "K";
  }
  return "?";
}

Dimension dimension_of(Unit u) {
  return (u == Unit::fs || u == Unit::ps) ? Dimension::time : Dimension::energy;
}

namespace {

// Scale into rad/ps (energies) or ps (times).
double to_internal(Unit u) {
  switch (u) {
    case Unit::wavenumber: return kRadPsPerWavenumber;
    case Unit::rad_per_ps: return 1.0;
    case Unit::per_ps: return 1.0;
    case Unit::per_fs: return 1e3;
    case Unit::kelvin: return kRadPsPerKelvin;
    case Unit::fs: return 1e-3;
    case Unit::ps: return 1.0;
  }
  return 1.0;
}

}  // namespace

double convert_units(double value, Unit from, Unit to) {
  const double internal = value * to_internal(from);
  if (dimension_of(from) == dimension_of(to)) return internal / to_internal(to);
  if (internal == 0.0) throw ConfigError("cannot invert a zero quantity across energy/time");
  return (1.0 / internal) / to_internal(to);
}

}  // namespace cohimpact::units
