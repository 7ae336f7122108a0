#pragma once

#include "hybridbf/model.hpp"

#include <filesystem>
#include <iosfwd>

namespace hybridbf {

// Channel cache file layout:
//
//   line 1   : JSON header terminated by '\n', e.g.
//              {"format":"hybridbf-channels","version":1,"num_users":2,
//               "num_rx":16,"num_tx":64,"num_paths":15,"seed":7,
//               "layout":"column-major","scalar":"complex128-le"}
//   payload  : for k = 0..K-1, H_k in column-major order, each entry as two
//              little-endian IEEE-754 doubles (re, im);
//              then for k = 0..K-1, l = 0..L-1: gain re, gain im,
//              arrival angle, departure angle (four little-endian doubles).
void write_channels(std::ostream& out, const ChannelSet& channels);
ChannelSet read_channels(std::istream& in);

void save_channels(const std::filesystem::path& path, const ChannelSet& channels);
ChannelSet load_channels(const std::filesystem::path& path);

}  // namespace hybridbf
