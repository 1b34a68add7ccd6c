#include <cstring>
#include <random>

#include "doctest.h"

#include "support/tempdir.hpp"
#include "xtask/error.hpp"
#include "xtask/ingest/brainvision.hpp"
#include "xtask/ingest/container.hpp"
#include "xtask/ingest/motion.hpp"
#include "xtask/ingest/session.hpp"
#include "xtask/synth/synth.hpp"

using namespace xtask;
using namespace xtask::ingest;
using xtask::test::read_file;
using xtask::test::TempDir;
using xtask::test::write_file;

namespace {

std::string header_text(int channels, const std::string& binary, const std::string& resolution = "0.1",
                        const std::string& extra = "") {
    std::string h = "Brain Vision Data Exchange Header File Version 1.0\n[Common Infos]\nCodepage=UTF-8\n"
                    "DataFile=rec.eeg\nMarkerFile=rec.vmrk\nDataFormat=BINARY\nDataOrientation=MULTIPLEXED\n";
    h += "NumberOfChannels=" + std::to_string(channels) + "\nSamplingInterval=2000\n" + extra;
    h += "[Binary Infos]\nBinaryFormat=" + binary + "\n[Channel Infos]\n";
    for (int c = 1; c <= channels; ++c) h += "Ch" + std::to_string(c) + "=E" + std::to_string(c) + ",," + resolution + ",µV\n";
    return h;
}

std::string marker_text(const std::vector<std::string>& entries) {
    std::string m = "Brain Vision Data Exchange Marker File, Version 1.0\n[Common Infos]\nDataFile=rec.eeg\n[Marker Infos]\n";
    for (std::size_t i = 0; i < entries.size(); ++i) m += "Mk" + std::to_string(i + 1) + "=" + entries[i] + "\n";
    return m;
}

template <typename T>
std::string binary(const std::vector<T>& values) {
    std::string out(values.size() * sizeof(T), '\0');
    std::memcpy(out.data(), values.data(), out.size());
    return out;
}

template <typename Fn>
std::string parse_reason(Fn&& fn) {
    try {
        fn();
    } catch (const ParseError& e) {
        return e.reason();
    }
    return "no error";
}

std::string motion_csv(std::size_t rows, std::size_t markers, const std::string& rate_line = "# rate = 500\n") {
    std::string text = rate_line + "frame";
    for (std::size_t m = 0; m < markers; ++m) {
        for (const char* a : {"_x", "_y", "_z"}) text += ",m" + std::to_string(m) + a;
    }
    text += "\n";
    for (std::size_t r = 0; r < rows; ++r) {
        text += std::to_string(r);
        for (std::size_t m = 0; m < markers; ++m) {
            text += "," + std::to_string(static_cast<double>(r) * 0.5) + "," + std::to_string(static_cast<double>(m)) +
                    ",-1.25";
        }
        text += "\n";
    }
    return text;
}

// Blank out `len` x-cells of marker 0 from row `from`.
std::string with_dropout(std::string text, std::size_t from, std::size_t len) {
    std::istringstream in(text);
    std::string line, out;
    std::size_t data_row = 0;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.starts_with('#')) {
            out += line + "\n";
            continue;
        }
        if (header) {
            header = false;
            out += line + "\n";
            continue;
        }
        if (data_row >= from && data_row < from + len) {
            const auto a = line.find(',');
            const auto b = line.find(',', a + 1);
            line = line.substr(0, a + 1) + "NaN" + line.substr(b);
        }
        out += line + "\n";
        ++data_row;
    }
    return out;
}

}  // namespace

TEST_CASE("BrainVision INT_16 samples are scaled by the channel resolution") {
    TempDir dir;
    std::vector<std::int16_t> raw;
    for (int s = 0; s < 30; ++s) {
        for (int c = 0; c < 4; ++c) raw.push_back(static_cast<std::int16_t>(s * 10 - c * 7));
    }
    write_file(dir.file("rec.vhdr"), header_text(4, "INT_16"));
    write_file(dir.file("rec.eeg"), binary(raw));
    write_file(dir.file("rec.vmrk"), marker_text({"Stimulus,S 16,12,1,0", "Response,,3,1,0"}));
    const auto rec = read_brainvision(dir.file("rec.vhdr"));
    REQUIRE(rec.channel_count() == 4);
    REQUIRE(rec.sample_count() == 30);
    CHECK(rec.rate() == 500.0);
    for (int s = 0; s < 30; ++s) {
        for (int c = 0; c < 4; ++c) CHECK(rec.data()(c, s) == static_cast<double>(raw[static_cast<std::size_t>(s * 4 + c)]) * 0.1);
    }
    REQUIRE(rec.markers().size() == 2);
    CHECK(rec.markers()[0] == Marker{12, "S 16"});
    CHECK(rec.markers()[1].code == "Response");
}

TEST_CASE("marker entry grammar maps to (position, description)") {
    TempDir dir;
    std::vector<float> raw(2 * 12400, 0.5f);
    write_file(dir.file("rec.vhdr"), header_text(2, "IEEE_FLOAT_32", "1"));
    write_file(dir.file("rec.eeg"), binary(raw));
    write_file(dir.file("rec.vmrk"), marker_text({"New Segment,,1,1,0", "Stimulus,S 16,12345,1,0"}));
    const auto rec = read_brainvision(dir.file("rec.vhdr"));
    REQUIRE(rec.markers().size() == 2);
    CHECK(rec.markers()[1] == Marker{12345, "S 16"});
}

TEST_CASE("BrainVision error cases carry distinct reasons and positions") {
    TempDir dir;
    std::vector<std::int16_t> raw(4 * 10, 1);
    write_file(dir.file("rec.eeg"), binary(raw));
    write_file(dir.file("rec.vmrk"), marker_text({}));

    SUBCASE("truncated binary") {
        write_file(dir.file("rec.vhdr"), header_text(4, "INT_16"));
        write_file(dir.file("rec.eeg"), binary(raw) + "x");
        CHECK(parse_reason([&] { read_brainvision(dir.file("rec.vhdr")); }) == "truncated");
    }
    SUBCASE("unsupported binary format") {
        write_file(dir.file("rec.vhdr"), header_text(4, "INT_32"));
        CHECK(parse_reason([&] { read_brainvision(dir.file("rec.vhdr")); }) != "no error");
    }
    SUBCASE("malformed key line reports its line") {
        write_file(dir.file("rec.vhdr"), header_text(4, "INT_16", "0.1", "this line has no equals\n"));
        try {
            read_brainvision(dir.file("rec.vhdr"));
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.reason() == "malformed_key");
            CHECK(e.line() == 10);
            CHECK(e.file() == dir.file("rec.vhdr"));
        }
    }
    SUBCASE("marker out of range") {
        write_file(dir.file("rec.vhdr"), header_text(4, "INT_16"));
        write_file(dir.file("rec.vmrk"), marker_text({"Stimulus,S 16,10,1,0"}));
        CHECK(parse_reason([&] { read_brainvision(dir.file("rec.vhdr")); }) == "marker_out_of_range");
    }
    SUBCASE("missing data file is an io error") {
        write_file(dir.file("rec.vhdr"), header_text(4, "INT_16"));
        std::filesystem::remove(dir.file("rec.eeg"));
        CHECK_THROWS_AS(read_brainvision(dir.file("rec.vhdr")), Error);
    }
}

TEST_CASE("BrainVision write/read round trip") {
    TempDir dir;
    SignalMatrix data(3, 50);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 20.0);
    for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = static_cast<double>(static_cast<float>(n(rng)));
    const RawRecording rec(data, 500.0, {"C1", "C3", "Cz"}, {{0, "S 99"}, {49, "S 98"}});

    write_brainvision(rec, dir.file("f.vhdr"), BinaryFormat::float32);
    CHECK(read_brainvision(dir.file("f.vhdr")) == rec);

    write_brainvision(rec, dir.file("i.vhdr"), BinaryFormat::int16, 0.1);
    const auto back = read_brainvision(dir.file("i.vhdr"));
    CHECK((back.data() - rec.data()).cwiseAbs().maxCoeff() <= 0.05 + 1e-12);
    CHECK(back.markers() == rec.markers());
}

TEST_CASE("motion CSV: markers x samples x 3 in millimetres") {
    const auto trace = parse_motion_csv(motion_csv(1000, 3), "m.csv");
    REQUIRE(trace.marker_names.size() == 3);
    CHECK(trace.sample_count() == 1000);
    CHECK(trace.rate == 500.0);
    CHECK(trace.positions[2](10, 0) == 5.0);
    CHECK(trace.positions[2](10, 1) == 2.0);
    CHECK(trace.positions[2](10, 2) == -1.25);
    CHECK(trace.flagged_gaps.empty());
}

TEST_CASE("motion gaps: short runs interpolated, long runs flagged") {
    SUBCASE("5-sample dropout") {
        const auto trace = parse_motion_csv(with_dropout(motion_csv(200, 2), 50, 5), "m.csv");
        CHECK(trace.flagged_gaps.empty());
        for (std::size_t r = 48; r < 58; ++r) CHECK(trace.positions[0](static_cast<Eigen::Index>(r), 0) == doctest::Approx(0.5 * static_cast<double>(r)));
    }
    SUBCASE("50-sample dropout") {
        const auto trace = parse_motion_csv(with_dropout(motion_csv(200, 2), 50, 50), "m.csv");
        REQUIRE(trace.flagged_gaps.size() == 1);
        CHECK(trace.flagged_gaps[0] == GapSpan{0, 50, 100});
        CHECK(trace.positions[0].allFinite());
        CHECK(trace.has_gap(0, 90, 120));
        CHECK_FALSE(trace.has_gap(1, 90, 120));
        CHECK_FALSE(trace.has_gap(0, 100, 120));
    }
}

TEST_CASE("motion CSV error cases") {
    CHECK_THROWS_AS(parse_motion_csv("# rate = 500\nm_x,m_y\n1,2\n", "m.csv"), ParseError);
    try {
        parse_motion_csv("# rate = 500\nm_x,m_y,m_z\n1,2,3\n1,abc,3\n", "m.csv");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
    }
    CHECK_THROWS_AS(parse_motion_csv("m_x,m_y,m_z\n1,2,3\n", "m.csv"), ParseError);
    CHECK(parse_motion_csv("m_x,m_y,m_z\n1,2,3\n", "m.csv", 250.0).rate == 250.0);
}

TEST_CASE("motion rate from a sidecar and round trip through the writer") {
    TempDir dir;
    write_file(dir.file("m.csv"), motion_csv(20, 1, ""));
    write_file(dir.file("m.csv.cfg"), "rate = 500\n");
    const auto trace = read_motion_csv(dir.file("m.csv"));
    CHECK(trace.rate == 500.0);
    write_motion_csv(trace, dir.file("w.csv"));
    CHECK(read_motion_csv(dir.file("w.csv")) == trace);
}

TEST_CASE("synchronize aligns motion sample 0 to the start trigger") {
    const SignalMatrix eeg = SignalMatrix::Zero(2, 5000);
    MotionTrace motion;
    motion.marker_names = {"left_hand"};
    motion.positions = {PositionMatrix::Zero(3000, 3)};
    motion.rate = 500.0;
    MarkerCodes codes;
    codes.motion_stop = "";

    const auto session = synchronize(RawRecording(eeg, 500.0, {"C1", "C3"}, {{1000, "S 99"}}), motion, codes);
    CHECK(session.motion_offset == 1000);
    CHECK(session.covers_motion(1000));
    CHECK(session.covers_motion(3999));
    CHECK_FALSE(session.covers_motion(4000));
    CHECK_FALSE(session.covers_motion(999));

    try {
        synchronize(RawRecording(eeg, 500.0, {"C1", "C3"}, {}), motion, codes);
        FAIL("expected a sync error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::sync);
    }
    try {
        synchronize(RawRecording(eeg, 500.0, {"C1", "C3"}, {{100, "S 99"}, {200, "S 99"}}), motion, codes);
        FAIL("expected an ambiguity error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::sync);
        CHECK(std::string(e.what()).find("100") != std::string::npos);
        CHECK(std::string(e.what()).find("200") != std::string::npos);
    }
    auto slow = motion;
    slow.rate = 100.0;
    CHECK_THROWS_AS(synchronize(RawRecording(eeg, 500.0, {"C1", "C3"}, {{1000, "S 99"}}), slow, codes), Error);
}

TEST_CASE("synchronize checks the stop trigger against the motion length") {
    const SignalMatrix eeg = SignalMatrix::Zero(1, 5000);
    MotionTrace motion;
    motion.marker_names = {"left_hand"};
    motion.positions = {PositionMatrix::Zero(3000, 3)};
    motion.rate = 500.0;
    const MarkerCodes codes;
    CHECK_NOTHROW(synchronize(RawRecording(eeg, 500.0, {"C1"}, {{1000, "S 99"}, {4002, "S 98"}}), motion, codes));
    CHECK_THROWS_AS(synchronize(RawRecording(eeg, 500.0, {"C1"}, {{1000, "S 99"}, {4010, "S 98"}}), motion, codes), Error);
}

TEST_CASE("trial segmentation on a synthetic session") {
    synth::SynthConfig config;
    config.trials_per_set = 6;
    const auto generated = synth::generate_session(config, 1);
    const auto& trials = generated.session.trials;
    REQUIRE(trials.size() == 6);
    for (std::size_t i = 0; i < trials.size(); ++i) {
        CHECK(trials[i].valid);
        CHECK(trials[i].release_sample == generated.truth.release_samples[i]);
        CHECK(trials[i].rest_duration >= 5.0);
        CHECK(trials[i].end_sample > trials[i].release_sample);
    }

    SUBCASE("an error symbol invalidates its trial") {
        auto markers = generated.session.eeg.markers();
        markers.push_back({trials[2].release_sample - 100, config.codes.error_symbol});
        std::sort(markers.begin(), markers.end(), [](const Marker& a, const Marker& b) { return a.sample < b.sample; });
        auto session = generated.session;
        session.eeg = RawRecording(session.eeg.data(), session.eeg.rate(), session.eeg.channel_names(), markers);
        const auto table = build_trials(session, config.codes);
        CHECK_FALSE(table[2].valid);
        CHECK(table[2].reason == "error-symbol");
        CHECK(table[1].valid);
    }
    SUBCASE("a longer minimum rest rejects short rests") {
        const auto table = build_trials(generated.session, config.codes, 100.0);
        for (const auto& t : table) CHECK(t.reason == "rest<100s");
    }
}

TEST_CASE("session cache round trip is bit exact") {
    TempDir dir;
    synth::SynthConfig config;
    config.trials_per_set = 3;
    auto session = synth::generate_session(config, 2).session;
    session.attachments.push_back({"emg.bin", {1, 2, 3, 255}});
    session.trials[1].onset_sample = 1234;
    save_session(session, dir.file("s.xtc"));
    const auto back = load_session(dir.file("s.xtc"));
    CHECK(back == session);
    CHECK(back.eeg.data() == session.eeg.data());
    const auto header = read_container_header(dir.file("s.xtc"));
    CHECK(header.kind == "session");
    CHECK(header.meta.at("subject_id") == session.subject_id);
}

TEST_CASE("container rejects bad magic, newer versions and corrupt blocks") {
    TempDir dir;
    ContainerWriter writer("session");
    const std::vector<double> values{1.0, 2.0, 3.0};
    writer.add_f64("v", values, {3});
    const auto bytes = writer.serialize();

    const auto expect_format_error = [&](std::string data, const std::string& fragment) {
        try {
            ContainerReader::parse(std::move(data), "x");
            FAIL("expected a format error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::format);
            CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
        }
    };
    auto bad_magic = bytes;
    bad_magic[0] = 'Y';
    expect_format_error(bad_magic, "magic");
    auto newer = bytes;
    newer[8] = 2;
    expect_format_error(newer, "unsupported");
    auto corrupt = bytes;
    corrupt.back() ^= 0x01;
    expect_format_error(corrupt, "checksum");

    const auto reader = ContainerReader::parse(bytes, "x");
    CHECK(reader.f64("v") == values);
    CHECK(reader.shape("v") == std::vector<std::size_t>{3});

    write_file(dir.file("model.xtc"), bytes);
    CHECK_THROWS_AS(load_session(dir.file("model.xtc")), Error);
}

TEST_CASE("crc32 matches the standard check value") {
    CHECK(crc32_of("123456789") == 0xCBF43926u);
}
