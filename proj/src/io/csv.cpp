#include "byzsgd/io/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace byzsgd::io {

const char* kEpochCsvHeader =
    "t,train_loss,test_loss,test_acc,uc_size,byz_in_uc,gamma_used,messages_sent";

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string epoch_csv_line(const orch::EpochRecord& rec) {
  std::string line = std::to_string(rec.t);
  line += ',';
  line += format_g17(rec.train_loss);
  line += ',';
  line += format_g17(rec.test_loss);
  line += ',';
  line += format_g17(rec.test_acc);
  line += ',';
  line += std::to_string(rec.uc_size);
  line += ',';
  line += std::to_string(rec.byz_in_uc);
  line += ',';
  line += format_g17(rec.gamma_used);
  line += ',';
  line += std::to_string(rec.messages_sent);
  return line;
}

void write_epoch_csv(const std::string& path, const std::vector<orch::EpochRecord>& records) {
  std::ofstream out(path, std::ios::binary);  // binary: no platform newline surprises
  if (!out) throw std::runtime_error("csv: cannot open '" + path + "' for writing");
  out << kEpochCsvHeader << '\n';
  for (const auto& rec : records) out << epoch_csv_line(rec) << '\n';
}

}  // namespace byzsgd::io
