#pragma once

#include <filesystem>
#include <iosfwd>

#include "fslab/network.h"

namespace fslab {

// Binary network container; byte layout in docs/network_format.md.
inline constexpr char kNetworkMagic[8] = {'F', 'S', 'L', 'A', 'B', 'N', 'E', 'T'};
inline constexpr unsigned char kNetworkFormatVersion = 1;

void write_network(std::ostream& out, const Network& net);
Network read_network(std::istream& in);

void save_network(const std::filesystem::path& path, const Network& net);
Network load_network(const std::filesystem::path& path);

}  // namespace fslab
