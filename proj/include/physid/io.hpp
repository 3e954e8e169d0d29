#pragma once

#include <string>

#include "physid/mech_sim.hpp"

namespace physid::io {

/// Dataset CSV, header `t,u_1..u_r,y_1..y_m,fe_1..fe_n`, 17 significant
/// digits (lossless double round trip).
void export_csv(const mech::SimRecord& rec, const std::string& path);

/// Parses a dataset CSV; malformed headers or rows raise with the line number.
mech::SimRecord ingest_csv(const std::string& path);

}  // namespace physid::io
