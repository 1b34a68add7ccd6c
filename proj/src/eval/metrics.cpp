#include "xtask/eval/metrics.hpp"

#include <fmt/format.h>

#include "xtask/error.hpp"

namespace xtask::eval {

Confusion& Confusion::operator+=(const Confusion& o) {
    tp += o.tp;
    fn += o.fn;
    tn += o.tn;
    fp += o.fp;
    return *this;
}

Confusion confusion(std::span<const Label> predicted, std::span<const Label> truth) {
    if (predicted.size() != truth.size()) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("{} predictions against {} ground-truth labels", predicted.size(), truth.size()));
    }
    Confusion c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = predicted[i] == Label::lrp;
        if (truth[i] == Label::lrp) {
            ++(p ? c.tp : c.fn);
        } else {
            ++(p ? c.fp : c.tn);
        }
    }
    return c;
}

Rates rates(const Confusion& c) {
    if (c.tp + c.fn == 0) throw Error(ErrorKind::metric, "TPR undefined: no LRP windows in the ground truth");
    if (c.tn + c.fp == 0) throw Error(ErrorKind::metric, "TNR undefined: no NoLRP windows in the ground truth");
    Rates r;
    r.confusion = c;
    r.tpr = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    r.tnr = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    r.ba = (r.tpr + r.tnr) / 2.0;
    return r;
}

Rates balanced_accuracy(std::span<const Label> predicted, std::span<const Label> truth) {
    return rates(confusion(predicted, truth));
}

}  // namespace xtask::eval
