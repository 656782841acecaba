#include <fstream>
#include <sstream>

#include "divuda/csv.hpp"
#include "divuda/trainer.hpp"

namespace divuda {

namespace {

void put(std::ostream& out, const std::optional<double>& v) {
  if (v) out << format_double(*v);
}

}  // namespace

std::string TrainLog::to_csv() const {
  std::ostringstream out;
  out << "iteration,loss_s,loss_t,loss_b,loss_c_mean,n_selected_source,n_selected_target,"
         "selected_clean_fraction,eval_target_accuracy,eval_unknown_rate\n";
  for (const auto& r : rows) {
    out << r.iteration << ',';
    put(out, r.loss_s);
    out << ',';
    put(out, r.loss_t);
    out << ',';
    put(out, r.loss_b);
    out << ',';
    put(out, r.loss_c_mean());
    out << ',' << r.n_selected_source << ',';
    if (r.n_selected_target) out << *r.n_selected_target;
    out << ',';
    put(out, r.selected_clean_fraction);
    out << ',';
    put(out, r.eval_target_accuracy);
    out << ',';
    put(out, r.eval_unknown_rate);
    out << '\n';
  }
  return out.str();
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << to_csv();
}

}  // namespace divuda
