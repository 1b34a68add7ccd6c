#include "xtask/eval/relabel.hpp"

#include <fmt/format.h>

#include "xtask/error.hpp"

namespace xtask::eval {

static_assert(kRangeFirst == 60 && kRangeLast == preprocess::kWindowCount - 1,
              "the search range must close the gap between both fixed labels");

LabelVector relabel(std::span<const Label> predicted, const RelabelOptions& options) {
    if (predicted.size() != static_cast<std::size_t>(preprocess::kWindowCount)) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("relabel needs {} predictions, got {}", preprocess::kWindowCount, predicted.size()));
    }
    LabelVector truth;
    truth.fill(Label::lrp);

    const int last = options.scan_fixed_window ? kRangeLast : kRangeLast - 1;
    int change_after = kRangeFirst - 1;
    for (int end = last; end - 2 >= kRangeFirst; --end) {
        const auto at = [&](int k) { return predicted[static_cast<std::size_t>(k)]; };
        if (at(end) == Label::no_lrp && at(end - 1) == Label::no_lrp && at(end - 2) == Label::no_lrp) {
            change_after = end;
            break;
        }
    }
    for (int k = 0; k <= change_after; ++k) truth[static_cast<std::size_t>(k)] = Label::no_lrp;
    truth[static_cast<std::size_t>(kRangeLast)] = Label::lrp;
    return truth;
}

}  // namespace xtask::eval
