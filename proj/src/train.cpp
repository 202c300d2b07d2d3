#include "casumm/train.hpp"

#include <fstream>
#include <json.hpp>

#include "casumm/errors.hpp"

namespace casumm {

void write_train_log(const std::string& path, const std::vector<EpochLog>& log) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open training log for writing: " + path);
    for (const auto& entry : log) {
        nlohmann::json rec;
        rec["epoch"] = entry.epoch;
        rec["loss"] = entry.loss;
        rec["accuracy"] = entry.accuracy;
        os << rec.dump() << "\n";
    }
}

}  // namespace casumm
