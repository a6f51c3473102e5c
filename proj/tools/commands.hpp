#pragma once

#include "picarz/io.hpp"

namespace picarz::cli {

void cmd_simulate(const Config& c);
void cmd_mesh(const Config& c);
void cmd_select_rank(const Config& c);
void cmd_fit(const Config& c);
void cmd_predict(const Config& c);
void cmd_report(const Config& c);
void cmd_benchmark(const Config& c);

}  // namespace picarz::cli
