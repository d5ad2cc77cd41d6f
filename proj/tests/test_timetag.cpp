#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "backflash/errors.hpp"
#include "backflash/timetag.hpp"

using namespace backflash;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
    return fs::temp_directory_path() / name;
}

} // namespace

TEST_CASE("binary tag files round-trip") {
    const std::vector<TimeTagRecord> records{
        {kChannelApd, 0},
        {kChannelMonitor, 181284745},
        {kChannelApd, 0xffffffffffffull},
        {kChannelMonitor, 1},
    };
    const fs::path path = temp_file("tags_roundtrip.tags");
    write_tags(path, records);
    CHECK(read_tags(path) == records);
    CHECK(fs::file_size(path) == 16 + records.size() * 9);
    fs::remove(path);
}

TEST_CASE("empty tag file is just the header") {
    const fs::path path = temp_file("tags_empty.tags");
    write_tags(path, {});
    CHECK(fs::file_size(path) == 16);
    CHECK(read_tags(path).empty());
    fs::remove(path);
}

TEST_CASE("header layout is little-endian with magic and count") {
    const std::vector<TimeTagRecord> records{{3, 0x0102030405060708ull}};
    const fs::path path = temp_file("tags_layout.tags");
    write_tags(path, records);

    std::ifstream in(path, std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    REQUIRE(bytes.size() == 25);
    CHECK(bytes[0] == 'B');
    CHECK(bytes[1] == 'F');
    CHECK(bytes[2] == 'T');
    CHECK(bytes[3] == 'G');
    CHECK(bytes[4] == 1); // version, LE
    CHECK(bytes[8] == 1); // record count, LE
    CHECK(bytes[16] == 3); // channel
    CHECK(bytes[17] == 0x08); // timestamp low byte first
    CHECK(bytes[24] == 0x01);
    fs::remove(path);
}

TEST_CASE("corrupt tag files are rejected") {
    const fs::path path = temp_file("tags_corrupt.tags");

    { std::ofstream(path, std::ios::binary) << "BFTX0000xxxxxxxx"; }
    CHECK_THROWS_AS(read_tags(path), IoError);

    { std::ofstream(path, std::ios::binary) << "BFT"; }
    CHECK_THROWS_AS(read_tags(path), IoError);

    // valid header claiming one record, but no record bytes
    write_tags(path, {});
    {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(8);
        const char one = 1;
        f.write(&one, 1);
    }
    CHECK_THROWS_AS(read_tags(path), IoError);

    CHECK_THROWS_AS(read_tags("/nonexistent/nowhere.tags"), IoError);
    fs::remove(path);
}

TEST_CASE("tag CSV emits one line per record") {
    const std::vector<TimeTagRecord> records{{0, 12}, {1, 345}};
    const fs::path path = temp_file("tags.csv");
    write_tags_csv(path, records);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "channel,timestamp_ps");
    std::getline(in, line);
    CHECK(line == "0,12");
    std::getline(in, line);
    CHECK(line == "1,345");
    CHECK_FALSE(std::getline(in, line));
    fs::remove(path);
}

TEST_CASE("channel filter extracts timestamps in order") {
    const std::vector<TimeTagRecord> records{
        {kChannelApd, 5}, {kChannelMonitor, 6}, {kChannelApd, 7}};
    const auto apd = timestamps_for_channel(records, kChannelApd);
    CHECK(apd == std::vector<std::int64_t>{5, 7});
    CHECK(timestamps_for_channel(records, 9).empty());
}
