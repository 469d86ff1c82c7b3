#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bte/discretization.hpp"
#include "bte/dose.hpp"
#include "bte/mc.hpp"
#include "bte/planning.hpp"

namespace bte {

// species,ix,iy,iz,iomega,ienergy,value
void write_flux_csv(const std::string& path, const PhaseField& psi, const PhaseGrid& grid);
// ix,iy,iz,x,y,z,dose[,dose_rel]
void write_dose_csv(const std::string& path, const DoseMap& d, const PhaseGrid& grid, bool normalized = false);
// ix,iy,iz,x,y,z,dose,stderr
void write_mc_csv(const std::string& path, const McResult& r, const PhaseGrid& grid);
// external: species,pair,isurface,iomega,ienergy,x,y,z,value; internal: species,ix,iy,iz,iomega,ienergy,value
// (-1 marks an index the reduced control does not resolve)
void write_control_csv(const std::string& path, const std::vector<double>& u, const ControlSpace& space,
                       const PhaseGrid& grid);
// ix,iy,iz,label
void write_labels_csv(const std::string& path, const RegionMap& map, const PhaseGrid& grid);
RegionMap read_labels_csv(const std::string& path, const PhaseGrid& grid);
// two columns with a header
void write_table_csv(const std::string& path, const std::string& a, const std::string& b,
                     const std::vector<double>& xa, const std::vector<double>& xb);
void write_key_values(const std::string& path, const std::vector<std::pair<std::string, std::string>>& kv);

std::uint64_t fnv1a(const std::string& data);
std::string hex64(std::uint64_t v);
std::string format_double(double v);

}  // namespace bte
