#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "backflash/errors.hpp"

namespace backflash {

// One detection event. Channel 0 is the APD under test, channel 1 the
// fiber monitor; other values are legal and pass through untouched.
struct TimeTagRecord {
    std::uint8_t channel = 0;
    std::uint64_t timestamp_ps = 0;

    bool operator==(const TimeTagRecord&) const = default;
};

inline constexpr std::uint8_t kChannelApd = 0;
inline constexpr std::uint8_t kChannelMonitor = 1;

// Binary layout (all little-endian):
//   bytes 0-3   magic "BFTG"
//   bytes 4-7   format version (u32), currently 1
//   bytes 8-15  record count (u64)
//   then count records of 9 bytes each: u8 channel, u64 timestamp_ps
inline constexpr char kTagMagic[4] = {'B', 'F', 'T', 'G'};
inline constexpr std::uint32_t kTagVersion = 1;

namespace detail {

inline void put_le(std::vector<char>& buf, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_le(const char* p, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

} // namespace detail

inline void write_tags(const std::filesystem::path& path,
                       std::span<const TimeTagRecord> records) {
    std::vector<char> buf;
    buf.reserve(16 + records.size() * 9);
    buf.insert(buf.end(), kTagMagic, kTagMagic + 4);
    detail::put_le(buf, kTagVersion, 4);
    detail::put_le(buf, records.size(), 8);
    for (const auto& r : records) {
        buf.push_back(static_cast<char>(r.channel));
        detail::put_le(buf, r.timestamp_ps, 8);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

inline std::vector<TimeTagRecord> read_tags(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::vector<char> buf((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
    if (buf.size() < 16) throw IoError("truncated tag file: " + path.string());
    if (!std::equal(kTagMagic, kTagMagic + 4, buf.data()))
        throw IoError("not a time-tag file (bad magic): " + path.string());
    const auto version = static_cast<std::uint32_t>(detail::get_le(buf.data() + 4, 4));
    if (version != kTagVersion)
        throw IoError("unsupported tag file version " + std::to_string(version) + ": "
                      + path.string());
    const std::uint64_t count = detail::get_le(buf.data() + 8, 8);
    if (buf.size() != 16 + count * 9)
        throw IoError("tag file length does not match record count: " + path.string());

    std::vector<TimeTagRecord> records(count);
    const char* p = buf.data() + 16;
    for (std::uint64_t i = 0; i < count; ++i, p += 9) {
        records[i].channel = static_cast<std::uint8_t>(p[0]);
        records[i].timestamp_ps = detail::get_le(p + 1, 8);
    }
    return records;
}

inline void write_tags_csv(const std::filesystem::path& path,
                           std::span<const TimeTagRecord> records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "channel,timestamp_ps\n";
    for (const auto& r : records)
        out << static_cast<int>(r.channel) << ',' << r.timestamp_ps << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

inline std::vector<std::int64_t> timestamps_for_channel(
    std::span<const TimeTagRecord> records, std::uint8_t channel) {
    std::vector<std::int64_t> out;
    for (const auto& r : records)
        if (r.channel == channel) out.push_back(static_cast<std::int64_t>(r.timestamp_ps));
    return out;
}

} // namespace backflash
