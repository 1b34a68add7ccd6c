#include <fmt/format.h>

#include "xtask/error.hpp"
#include "xtask/ingest/container.hpp"
#include "xtask/ingest/session.hpp"

namespace xtask::ingest {

namespace {

constexpr const char* kSessionKind = "session";

nlohmann::json trial_to_json(const Trial& t) {
    nlohmann::json j{{"index", t.index},
                     {"rest_start", t.rest_start_sample},
                     {"release", t.release_sample},
                     {"end", t.end_sample},
                     {"movement", to_string(t.movement)},
                     {"set", t.set_index},
                     {"valid", t.valid},
                     {"rest_duration", t.rest_duration},
                     {"reason", t.reason}};
    j["onset"] = t.onset_sample ? nlohmann::json(*t.onset_sample) : nlohmann::json(nullptr);
    return j;
}

Trial trial_from_json(const nlohmann::json& j) {
    Trial t;
    t.index = j.at("index").get<std::size_t>();
    t.rest_start_sample = j.at("rest_start").get<std::size_t>();
    t.release_sample = j.at("release").get<std::size_t>();
    t.end_sample = j.at("end").get<std::size_t>();
    t.movement = parse_movement(j.at("movement").get<std::string>());
    t.set_index = j.at("set").get<int>();
    t.valid = j.at("valid").get<bool>();
    t.rest_duration = j.at("rest_duration").get<double>();
    t.reason = j.at("reason").get<std::string>();
    if (!j.at("onset").is_null()) t.onset_sample = j.at("onset").get<std::size_t>();
    return t;
}

}  // namespace

void save_session(const SessionData& session, const std::string& path) {
    ContainerWriter writer(kSessionKind);
    auto& meta = writer.meta();
    meta["subject_id"] = session.subject_id;
    meta["task"] = to_string(session.task);
    meta["set_index"] = session.set_index;
    meta["motion_offset"] = session.motion_offset;

    const auto& eeg = session.eeg;
    meta["eeg"] = {{"rate", eeg.rate()}, {"channels", eeg.channel_names()}};
    auto markers = nlohmann::json::array();
    for (const auto& m : eeg.markers()) markers.push_back({m.sample, m.code});
    meta["eeg"]["markers"] = std::move(markers);
    writer.add_f64("eeg", {eeg.data().data(), static_cast<std::size_t>(eeg.data().size())},
                   {eeg.channel_count(), eeg.sample_count()});

    const auto& motion = session.motion;
    auto gaps = nlohmann::json::array();
    for (const auto& g : motion.flagged_gaps) gaps.push_back({g.marker, g.begin, g.end});
    meta["motion"] = {{"rate", motion.rate}, {"markers", motion.marker_names}, {"gaps", std::move(gaps)}};
    for (std::size_t m = 0; m < motion.positions.size(); ++m) {
        const auto& p = motion.positions[m];
        writer.add_f64(fmt::format("motion/{}", m), {p.data(), static_cast<std::size_t>(p.size())},
                       {static_cast<std::size_t>(p.rows()), 3});
    }

    auto trials = nlohmann::json::array();
    for (const auto& t : session.trials) trials.push_back(trial_to_json(t));
    meta["trials"] = std::move(trials);

    auto names = nlohmann::json::array();
    for (const auto& a : session.attachments) {
        names.push_back(a.name);
        writer.add_bytes("attachment/" + a.name, a.bytes);
    }
    meta["attachments"] = std::move(names);
    writer.write(path);
}

SessionData load_session(const std::string& path) {
    const auto reader = ContainerReader::read(path);
    if (reader.kind() != kSessionKind) {
        throw Error(ErrorKind::format, fmt::format("{}: container holds '{}', expected a session", path, reader.kind()));
    }
    const auto& meta = reader.meta();
    try {
        SessionData session;
        session.subject_id = meta.at("subject_id").get<std::string>();
        session.task = parse_movement(meta.at("task").get<std::string>());
        session.set_index = meta.at("set_index").get<int>();
        session.motion_offset = meta.at("motion_offset").get<std::size_t>();

        const auto& e = meta.at("eeg");
        const auto shape = reader.shape("eeg");
        if (shape.size() != 2) throw Error(ErrorKind::format, fmt::format("{}: eeg block must be 2-D", path));
        const auto values = reader.f64("eeg");
        SignalMatrix data = Eigen::Map<const SignalMatrix>(values.data(), static_cast<Eigen::Index>(shape[0]),
                                                           static_cast<Eigen::Index>(shape[1]));
        std::vector<Marker> markers;
        for (const auto& m : e.at("markers")) markers.push_back({m.at(0).get<std::size_t>(), m.at(1).get<std::string>()});
        session.eeg = RawRecording(std::move(data), e.at("rate").get<double>(),
                                   e.at("channels").get<std::vector<std::string>>(), std::move(markers));

        const auto& mo = meta.at("motion");
        session.motion.rate = mo.at("rate").get<double>();
        session.motion.marker_names = mo.at("markers").get<std::vector<std::string>>();
        for (std::size_t m = 0; m < session.motion.marker_names.size(); ++m) {
            const auto name = fmt::format("motion/{}", m);
            const auto rows = reader.shape(name).at(0);
            const auto v = reader.f64(name);
            session.motion.positions.emplace_back(
                Eigen::Map<const PositionMatrix>(v.data(), static_cast<Eigen::Index>(rows), 3));
        }
        for (const auto& g : mo.at("gaps")) {
            session.motion.flagged_gaps.push_back(
                {g.at(0).get<std::size_t>(), g.at(1).get<std::size_t>(), g.at(2).get<std::size_t>()});
        }
        for (const auto& t : meta.at("trials")) session.trials.push_back(trial_from_json(t));
        for (const auto& name : meta.at("attachments")) {
            const auto n = name.get<std::string>();
            session.attachments.push_back({n, reader.bytes("attachment/" + n)});
        }
        return session;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::format, fmt::format("{}: malformed session metadata: {}", path, ex.what()));
    }
}

}  // namespace xtask::ingest
