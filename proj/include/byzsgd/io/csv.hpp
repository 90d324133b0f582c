#pragma once

#include <string>
#include <vector>

#include "byzsgd/orch/config.hpp"

namespace byzsgd::io {

/// Fixed schema: t,train_loss,test_loss,test_acc,uc_size,byz_in_uc,gamma_used,
/// messages_sent. Floats carry 17 significant digits so re-parsing is
/// bit-faithful.
extern const char* kEpochCsvHeader;

std::string epoch_csv_line(const orch::EpochRecord& rec);
void write_epoch_csv(const std::string& path, const std::vector<orch::EpochRecord>& records);

std::string format_g17(double v);

}  // namespace byzsgd::io
