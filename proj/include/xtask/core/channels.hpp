#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xtask/core/types.hpp"

namespace xtask {

enum class ChannelSetKind { custom, standard };

struct ChannelSet {
    std::string name;
    std::vector<std::string> channels;
    ChannelSetKind kind = ChannelSetKind::custom;

    bool operator==(const ChannelSet&) const = default;
};

/// The 64 electrodes of the actiCap montage (FCz is the reference and not
/// part of the recorded set), in amplifier order.
std::span<const std::string_view> cap_vocabulary();

/// Canonical spelling of a cap electrode, matched case-insensitively.
std::optional<std::string> canonical_channel(std::string_view name);

enum class Hemisphere { left, midline, right };

/// Odd labels are left, even labels right, `z` labels midline.
Hemisphere hemisphere(std::string_view name);

/// C3 <-> C4, Cz -> Cz.
std::string mirror_channel(std::string_view name);

/// Azimuthal projection of the electrode on the scalp, in units of one 10 %
/// step along the nasion-inion arc. Cz is the origin, +x right, +y nasion.
struct ScalpPosition {
    double x = 0.0;
    double y = 0.0;
};

ScalpPosition scalp_position(std::string_view name);
double scalp_distance(std::string_view a, std::string_view b);

/// Named channel sets. Defaults come from an embedded config text in the same
/// `name = ch1, ch2, ...` format users can load to override or extend them.
class ChannelRegistry {
public:
    static ChannelRegistry with_defaults();
    static std::string_view default_config_text();

    /// Validates names against the cap vocabulary; replaces an existing set.
    void add(ChannelSet set);
    void load_config(std::string_view text, std::string_view source = "<channel sets>");

    const ChannelSet& get(std::string_view name) const;
    bool contains(std::string_view name) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, ChannelSet, std::less<>> sets_;
};

/// Resolves a set from the default registry.
ChannelSet make_channel_set(std::string_view name);

/// Rows reordered to the set's order; rate and markers unchanged.
RawRecording select_channels(const RawRecording& rec, const ChannelSet& set);

/// Row indices of `set` channels within `names`; throws naming the first absent channel.
std::vector<std::size_t> channel_indices(const std::vector<std::string>& names, const ChannelSet& set);

}  // namespace xtask
