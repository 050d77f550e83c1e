#include "pathnewton/distsim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <tuple>

namespace pathnewton {

std::string ProcessorId::str() const {
  switch (kind) {
    case Kind::Leader: return "leader";
    case Kind::Path: return "path" + std::to_string(index);
    case Kind::Arc:
      return "arc" + std::to_string(block) + "." + std::to_string(index);
  }
  return "?";
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Broadcast commands (SimMessage::tag when kind == Broadcast).
enum BCmd : int {
  kBRefresh = 0,
  kBCgFirst,
  kBCgAlpha,
  kBCgStep,
  kBCgFinish,
  kBDirection,
  kBTrial,
  kBCommit,
  kBDone,
};

// Sweep tags for PathContribution / ArcFeedback messages.
enum Sweep : int { kSwRefresh = 0, kSwHvp, kSwDirection, kSwTrial };

// Reduction tags for ReduceUp messages.
enum RTag : int { kRRefresh = 0, kRCurvature, kRResidual, kRDirection, kRTrial };

const char* broadcast_name(int tag) {
  switch (tag) {
    case kBRefresh: return "refresh";
    case kBCgFirst: return "cg-first";
    case kBCgAlpha: return "cg-alpha";
    case kBCgStep: return "cg-step";
    case kBCgFinish: return "cg-finish";
    case kBDirection: return "direction";
    case kBTrial: return "trial";
    case kBCommit: return "commit";
    case kBDone: return "done";
  }
  return "?";
}

const char* sweep_name(int tag) {
  switch (tag) {
    case kSwRefresh: return "refresh";
    case kSwHvp: return "hvp";
    case kSwDirection: return "direction";
    case kSwTrial: return "trial";
  }
  return "?";
}

const char* reduce_name(int tag) {
  switch (tag) {
    case kRRefresh: return "refresh-stats";
    case kRCurvature: return "curvature";
    case kRResidual: return "residual";
    case kRDirection: return "direction";
    case kRTrial: return "trial";
  }
  return "?";
}

std::string message_label(const SimMessage& m) {
  switch (m.kind) {
    case SimMessage::Kind::PathContribution:
      return std::string("PathContribution/") + sweep_name(m.tag);
    case SimMessage::Kind::ArcFeedback:
      return std::string("ArcFeedback/") + sweep_name(m.tag);
    case SimMessage::Kind::ReduceUp:
      return std::string("ReduceUp/") + reduce_name(m.tag);
    case SimMessage::Kind::Broadcast:
      return std::string("Broadcast/") + broadcast_name(m.tag);
  }
  return "?";
}

class Engine {
public:
  explicit Engine(std::string* log) : log_(log) {}

  SimStats stats;

  void send(SimMessage m) {
    if (m.round <= round_)
      throw ProtocolError(m.src.str() + " emitted a round-" +
                          std::to_string(m.round) + " message during round " +
                          std::to_string(round_));
    queue_[m.round].push_back(std::move(m));
  }

  void mark_finished() { finished_ = true; }
  bool finished() const { return finished_; }
  int round() const { return round_; }
  void set_phase(int outer) { phase_ = outer; }
  void count_eval(int sweep_tag) { ops_by_sweep_[sweep_tag] += 1; }

  std::int64_t ops_total() const {
    std::int64_t s = 0;
    for (std::int64_t v : ops_by_sweep_) s += v;
    return s;
  }

  OpCounter op_counter() const {
    // The sim has no separate gradient/diagonal passes: refresh-style
    // sweeps deliver those for free, so the split below only mirrors
    // which sweep the work happened in.
    OpCounter ops;
    ops.refresh = ops_by_sweep_[kSwRefresh] + ops_by_sweep_[kSwTrial];
    ops.gradient = ops_by_sweep_[kSwDirection];
    ops.hvp = ops_by_sweep_[kSwHvp];
    return ops;
  }

  template <typename Dispatch>
  void run(Dispatch&& dispatch) {
    while (!queue_.empty()) {
      auto it = queue_.begin();
      round_ = it->first;
      std::vector<SimMessage> batch = std::move(it->second);
      queue_.erase(it);
      std::sort(batch.begin(), batch.end(),
                [](const SimMessage& a, const SimMessage& b) {
                  return std::tie(a.src, a.dst, a.kind, a.tag) <
                         std::tie(b.src, b.dst, b.kind, b.tag);
                });
      for (const SimMessage& m : batch) deliver(m);

      std::map<ProcessorId, std::vector<SimMessage>> inboxes;
      for (SimMessage& m : batch) inboxes[m.dst].push_back(std::move(m));
      for (auto& [dst, inbox] : inboxes) dispatch(dst, inbox);
    }
    stats.rounds = round_;
  }

private:
  void deliver(const SimMessage& m) {
    ++stats.total_messages;
    if (static_cast<int>(stats.messages_per_outer.size()) <= phase_)
      stats.messages_per_outer.resize(phase_ + 1, 0);
    ++stats.messages_per_outer[phase_];
    switch (m.kind) {
      case SimMessage::Kind::PathContribution:
        ++stats.path_contributions;
        ops_by_sweep_[m.tag] += 1;
        break;
      case SimMessage::Kind::ArcFeedback:
        ++stats.arc_feedbacks;
        ops_by_sweep_[m.tag] += 1;
        break;
      case SimMessage::Kind::ReduceUp: ++stats.reduce_ups; break;
      case SimMessage::Kind::Broadcast: ++stats.broadcasts; break;
    }
    if ((m.kind == SimMessage::Kind::PathContribution ||
         m.kind == SimMessage::Kind::ArcFeedback) &&
        m.tag == kSwHvp)
      ++stats.cg_sweep_messages;

    if (log_ != nullptr) {
      *log_ += std::to_string(m.round);
      *log_ += '\t';
      *log_ += m.src.str();
      *log_ += '\t';
      *log_ += m.dst.str();
      *log_ += '\t';
      *log_ += message_label(m);
      char buf[40];
      for (double v : m.values) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        *log_ += '\t';
        *log_ += buf;
      }
      *log_ += '\n';
    }
  }

  std::map<int, std::vector<SimMessage>> queue_;
  int round_ = 0;
  int phase_ = 0;
  bool finished_ = false;
  std::string* log_ = nullptr;
  std::int64_t ops_by_sweep_[4] = {0, 0, 0, 0};
};

struct ArcRef {
  int block = 0;
  int arc = 0;
  double weight = 0.0;
  ProcessorId id;
};

class PathProc {
public:
  PathProc(Engine* eng, const NetworkInstance* inst, const NewtonConfig* cfg,
           int p, double x0, std::vector<ArcRef> arcs, int child_count)
      : eng_(eng), inst_(inst), cfg_(cfg), p_(p), x_(x0),
        cost_(inst->path_costs[p]), arcs_(std::move(arcs)),
        child_count_(child_count) {}

  double x() const { return x_; }

  void handle(const std::vector<SimMessage>& inbox) {
    if (inbox.size() == 1 && inbox[0].kind == SimMessage::Kind::Broadcast) {
      handle_broadcast(inbox[0]);
      return;
    }
    std::vector<const SimMessage*> feedback, reduces;
    for (const SimMessage& m : inbox) {
      if (m.kind == SimMessage::Kind::ArcFeedback) feedback.push_back(&m);
      else if (m.kind == SimMessage::Kind::ReduceUp) reduces.push_back(&m);
      else throw ProtocolError(id().str() + ": unexpected " + message_label(m));
    }
    if (!feedback.empty()) {
      const int tag = feedback[0]->tag;
      if (static_cast<int>(feedback.size()) != static_cast<int>(arcs_.size()))
        throw ProtocolError(id().str() + " starved: expected " +
                            std::to_string(arcs_.size()) + " feedback messages, got " +
                            std::to_string(feedback.size()));
      if (tag == kSwRefresh) fold_refresh(feedback, reduces);
      else if (tag == kSwHvp) fold_hvp(feedback);
      else throw ProtocolError(id().str() + ": unexpected feedback sweep");
    } else {
      const int tag = reduces[0]->tag;
      if (static_cast<int>(reduces.size()) != child_count_)
        throw ProtocolError(id().str() + " starved: expected " +
                            std::to_string(child_count_) + " child partials, got " +
                            std::to_string(reduces.size()));
      if (tag == kRDirection) fold_direction(reduces);
      else if (tag == kRTrial) fold_trial(reduces);
      else throw ProtocolError(id().str() + ": unexpected reduction kind");
    }
  }

private:
  ProcessorId id() const { return ProcessorId::path(p_); }

  void handle_broadcast(const SimMessage& m) {
    switch (m.tag) {
      case kBRefresh: start_refresh_sweep(); break;
      case kBCommit:
        x_ = x_ + m.values[0] * y_;
        start_refresh_sweep();
        break;
      case kBCgFirst:
        setup_preconditioner();
        y_ = 0.0;
        r_ = g_;
        z_ = apply_s(r_);
        pd_ = -z_;
        rho0_part_ = r_ * z_;
        have_rho0_ = true;
        start_hvp_sweep();
        break;
      case kBCgStep:
        pd_ = -z_ + m.values[0] * pd_;
        start_hvp_sweep();
        break;
      case kBCgAlpha: {
        const double alpha = m.values[0];
        y_ += alpha * pd_;
        r_ += alpha * w_;
        z_ = apply_s(r_);
        emit_reduce(kRResidual, {r_ * z_}, eng_->round() + 1);
        break;
      }
      case kBCgFinish: {
        const int mode = static_cast<int>(m.values[0]);
        if (mode == 2) y_ = y_ + m.values[1] * pd_; // escape past iteration 0
        else if (mode == 3) y_ = -g_;               // escape at iteration 0
        start_direction_sweep();
        break;
      }
      case kBDirection: {
        const int kind = static_cast<int>(m.values[0]);
        y_ = kind == 1 ? -g_ : -g_ / (hpp_ > 0.0 ? hpp_ : 1.0);
        start_direction_sweep();
        break;
      }
      case kBTrial: {
        const double alpha = m.values[0];
        const double trial_x = x_ + alpha * y_;
        // Out-of-domain trials report NaN so the leader rejects them, the
        // same decision the centralized search makes.
        try {
          own_trial_ = eval(cost_, trial_x, path_display_name(*inst_, p_)).value;
        } catch (const DomainViolation&) {
          own_trial_ = std::numeric_limits<double>::quiet_NaN();
        }
        eng_->count_eval(kSwTrial);
        for (const ArcRef& a : arcs_)
          send_contribution(a, kSwTrial, a.weight * trial_x);
        if (child_count_ == 0)
          emit_reduce(kRTrial, {own_trial_}, eng_->round() + 3);
        break;
      }
      case kBDone: break;
      default:
        throw ProtocolError(id().str() + ": unknown broadcast command");
    }
  }

  void setup_preconditioner() {
    switch (cfg_->precond) {
      case Preconditioner::Kind::None:
        use_s_ = false;
        break;
      case Preconditioner::Kind::DiagHessian:
        if (!std::isfinite(hpp_) || hpp_ <= 0.0)
          throw ContractViolation(
              "Hessian-diagonal preconditioner needs a finite positive diagonal");
        inv_s_ = 1.0 / hpp_;
        use_s_ = true;
        break;
      case Preconditioner::Kind::DiagR:
        if (!std::isfinite(d2_) || d2_ <= 0.0)
          throw ContractViolation(
              "path-curvature preconditioner needs a finite positive diagonal");
        inv_s_ = 1.0 / d2_;
        use_s_ = true;
        break;
    }
  }

  double apply_s(double r) const { return use_s_ ? inv_s_ * r : r; }

  double take_rho0() {
    if (!have_rho0_) return 0.0;
    have_rho0_ = false;
    return rho0_part_;
  }

  void start_refresh_sweep() {
    const EvalTriple t = eval(cost_, x_, path_display_name(*inst_, p_));
    eng_->count_eval(kSwRefresh);
    val_ = t.value;
    d1_ = t.d1;
    d2_ = t.d2;
    if (arcs_.empty()) {
      g_ = d1_;
      hpp_ = d2_;
      emit_reduce(kRRefresh, {val_, std::abs(g_), g_ * g_}, eng_->round() + 3);
      return;
    }
    for (const ArcRef& a : arcs_) send_contribution(a, kSwRefresh, a.weight * x_);
  }

  void fold_refresh(const std::vector<const SimMessage*>& feedback,
                    const std::vector<const SimMessage*>& reduces) {
    if (static_cast<int>(reduces.size()) != child_count_)
      throw ProtocolError(id().str() + " starved: expected " +
                          std::to_string(child_count_) + " child partials");
    g_ = d1_;
    hpp_ = d2_;
    for (std::size_t i = 0; i < feedback.size(); ++i) {
      check_feedback_src(*feedback[i], arcs_[i]);
      g_ += arcs_[i].weight * feedback[i]->values[0];
      hpp_ += (arcs_[i].weight * arcs_[i].weight) * feedback[i]->values[1];
    }
    double f_part = val_;
    for (const SimMessage* m : reduces) f_part += m->values[0];
    emit_reduce(kRRefresh, {f_part, std::abs(g_), g_ * g_}, eng_->round() + 1);
  }

  void start_hvp_sweep() {
    if (arcs_.empty()) {
      w_ = d2_ * pd_;
      emit_reduce(kRCurvature, {pd_ * w_, pd_ * pd_, take_rho0()},
                  eng_->round() + 3);
      return;
    }
    for (const ArcRef& a : arcs_) send_contribution(a, kSwHvp, a.weight * pd_);
  }

  void fold_hvp(const std::vector<const SimMessage*>& feedback) {
    w_ = d2_ * pd_;
    for (std::size_t i = 0; i < feedback.size(); ++i) {
      check_feedback_src(*feedback[i], arcs_[i]);
      w_ += arcs_[i].weight * feedback[i]->values[1];
    }
    emit_reduce(kRCurvature, {pd_ * w_, pd_ * pd_, take_rho0()},
                eng_->round() + 1);
  }

  void start_direction_sweep() {
    gy_part_ = g_ * y_;
    cap_own_ = kInf;
    const double upper = domain_upper(cost_);
    const double lower = domain_lower(cost_);
    if (y_ > 0.0 && upper < kInf) cap_own_ = std::min(cap_own_, (upper - x_) / y_);
    if (y_ < 0.0 && lower > -kInf) cap_own_ = std::min(cap_own_, (lower - x_) / y_);
    for (const ArcRef& a : arcs_) send_contribution(a, kSwDirection, a.weight * y_);
    if (child_count_ == 0)
      emit_reduce(kRDirection, {gy_part_, cap_own_}, eng_->round() + 3);
  }

  void fold_direction(const std::vector<const SimMessage*>& reduces) {
    double cap = cap_own_;
    for (const SimMessage* m : reduces) cap = std::min(cap, m->values[0]);
    emit_reduce(kRDirection, {gy_part_, cap}, eng_->round() + 1);
  }

  void fold_trial(const std::vector<const SimMessage*>& reduces) {
    double f_part = own_trial_;
    for (const SimMessage* m : reduces) f_part += m->values[0];
    emit_reduce(kRTrial, {f_part}, eng_->round() + 1);
  }

  void check_feedback_src(const SimMessage& m, const ArcRef& expected) const {
    if (m.src != expected.id)
      throw ProtocolError(id().str() + ": feedback from " + m.src.str() +
                          " where " + expected.id.str() + " was expected");
  }

  void send_contribution(const ArcRef& a, int tag, double value) {
    eng_->send({eng_->round() + 1, id(), a.id,
                SimMessage::Kind::PathContribution, tag, {value}});
  }

  void emit_reduce(int tag, std::vector<double> values, int round) {
    eng_->send({round, id(), ProcessorId::leader(), SimMessage::Kind::ReduceUp,
                tag, std::move(values)});
  }

  Engine* eng_;
  const NetworkInstance* inst_;
  const NewtonConfig* cfg_;
  int p_;
  double x_;
  ScalarCostFn cost_;
  std::vector<ArcRef> arcs_; // ascending (block, arc)
  int child_count_;

  // Values at the committed point.
  double val_ = 0.0, d1_ = 0.0, d2_ = 0.0;
  double g_ = 0.0, hpp_ = 0.0;
  bool use_s_ = false;
  double inv_s_ = 1.0;

  // Conjugate-gradient locals.
  double r_ = 0.0, z_ = 0.0, pd_ = 0.0, y_ = 0.0, w_ = 0.0;
  double rho0_part_ = 0.0;
  bool have_rho0_ = false;

  // Per-sweep scratch.
  double gy_part_ = 0.0, cap_own_ = kInf, own_trial_ = 0.0;
};

class ArcProc {
public:
  ArcProc(Engine* eng, const NetworkInstance* inst, int block, int arc,
          std::vector<ProcessorId> members, ProcessorId parent)
      : eng_(eng), inst_(inst), block_(block), arc_(arc),
        cost_(inst->blocks[block].arc_costs[arc]), members_(std::move(members)),
        parent_(parent) {}

  void handle(const std::vector<SimMessage>& inbox) {
    if (members_.empty()) {
      if (inbox.size() != 1 || inbox[0].kind != SimMessage::Kind::Broadcast)
        throw ProtocolError(id().str() + ": expected only broadcasts");
      handle_orphan_broadcast(inbox[0]);
      return;
    }
    if (static_cast<int>(inbox.size()) != static_cast<int>(members_.size()))
      throw ProtocolError(id().str() + " starved: expected " +
                          std::to_string(members_.size()) + " contributions, got " +
                          std::to_string(inbox.size()));
    const int tag = inbox[0].tag;
    double f_in = 0.0;
    for (std::size_t i = 0; i < inbox.size(); ++i) {
      const SimMessage& m = inbox[i];
      if (m.kind != SimMessage::Kind::PathContribution || m.tag != tag)
        throw ProtocolError(id().str() + ": mixed inbox during a sweep");
      if (m.src != members_[i])
        throw ProtocolError(id().str() + ": contribution from " + m.src.str() +
                            " where " + members_[i].str() + " was expected");
      f_in += m.values[0];
    }
    switch (tag) {
      case kSwRefresh: {
        f_ = f_in;
        const EvalTriple t = eval(cost_, f_, arc_display_name(*inst_, block_, arc_));
        eng_->count_eval(kSwRefresh);
        val_ = t.value;
        d1_ = t.d1;
        d2_ = t.d2;
        for (const ProcessorId& m : members_) send_feedback(m, kSwRefresh, d1_, d2_);
        send_parent_reduce(kRRefresh, val_);
        break;
      }
      case kSwHvp:
        for (const ProcessorId& m : members_)
          send_feedback(m, kSwHvp, d1_, d2_ * f_in);
        break;
      case kSwDirection: {
        double cap = kInf;
        const double upper = domain_upper(cost_);
        const double lower = domain_lower(cost_);
        if (f_in > 0.0 && upper < kInf) cap = std::min(cap, (upper - f_) / f_in);
        if (f_in < 0.0 && lower > -kInf) cap = std::min(cap, (lower - f_) / f_in);
        send_parent_reduce(kRDirection, cap);
        break;
      }
      case kSwTrial: {
        double v;
        try {
          v = eval(cost_, f_in, arc_display_name(*inst_, block_, arc_)).value;
        } catch (const DomainViolation&) {
          v = std::numeric_limits<double>::quiet_NaN();
        }
        eng_->count_eval(kSwTrial);
        send_parent_reduce(kRTrial, v);
        break;
      }
      default:
        throw ProtocolError(id().str() + ": unknown sweep tag");
    }
  }

private:
  ProcessorId id() const { return ProcessorId::arc(block_, arc_); }

  // An arc no path feeds has constant zero flow; it only answers the
  // Leader's value queries so objective sums stay complete.
  void handle_orphan_broadcast(const SimMessage& m) {
    switch (m.tag) {
      case kBRefresh:
      case kBCommit: {
        f_ = 0.0;
        const EvalTriple t = eval(cost_, f_, arc_display_name(*inst_, block_, arc_));
        eng_->count_eval(kSwRefresh);
        val_ = t.value;
        d1_ = t.d1;
        d2_ = t.d2;
        eng_->send({eng_->round() + 3, id(), ProcessorId::leader(),
                    SimMessage::Kind::ReduceUp, kRRefresh, {val_}});
        break;
      }
      case kBTrial: {
        const double v =
            eval(cost_, 0.0, arc_display_name(*inst_, block_, arc_)).value;
        eng_->count_eval(kSwTrial);
        eng_->send({eng_->round() + 3, id(), ProcessorId::leader(),
                    SimMessage::Kind::ReduceUp, kRTrial, {v}});
        break;
      }
      case kBDone: break;
      default:
        throw ProtocolError(id().str() + ": unexpected broadcast command");
    }
  }

  void send_feedback(const ProcessorId& dst, int tag, double a, double b) {
    eng_->send({eng_->round() + 1, id(), dst, SimMessage::Kind::ArcFeedback,
                tag, {a, b}});
  }

  void send_parent_reduce(int tag, double value) {
    eng_->send({eng_->round() + 1, id(), parent_, SimMessage::Kind::ReduceUp,
                tag, {value}});
  }

  Engine* eng_;
  const NetworkInstance* inst_;
  int block_, arc_;
  ScalarCostFn cost_;
  std::vector<ProcessorId> members_; // ascending path processors
  ProcessorId parent_;

  double f_ = 0.0, val_ = 0.0, d1_ = 0.0, d2_ = 0.0;
};

class LeaderProc {
public:
  LeaderProc(Engine* eng, const NewtonConfig* cfg, int num_paths,
             std::vector<ProcessorId> orphans, NewtonReport* report)
      : eng_(eng), cfg_(cfg), num_paths_(num_paths), orphans_(std::move(orphans)),
        report_(report), t_start_(std::chrono::steady_clock::now()) {}

  void begin() {
    broadcast(kBRefresh, {}, true);
    state_ = State::AwaitRefresh;
  }

  const char* awaiting() const {
    switch (state_) {
      case State::AwaitRefresh: return "refresh statistics";
      case State::AwaitCurvature: return "curvature partials";
      case State::AwaitResidual: return "residual partials";
      case State::AwaitDirection: return "direction partials";
      case State::AwaitTrial: return "trial objective partials";
      case State::Done: return "nothing";
    }
    return "?";
  }

  void handle(const std::vector<SimMessage>& inbox) {
    for (const SimMessage& m : inbox)
      if (m.kind != SimMessage::Kind::ReduceUp)
        throw ProtocolError("leader: unexpected " + message_label(m));
    switch (state_) {
      case State::AwaitRefresh: on_refresh(inbox); break;
      case State::AwaitCurvature: on_curvature(inbox); break;
      case State::AwaitResidual: on_residual(inbox); break;
      case State::AwaitDirection: on_direction(inbox); break;
      case State::AwaitTrial: on_trial(inbox); break;
      case State::Done:
        throw ProtocolError("leader: message after completion");
    }
  }

private:
  enum class State {
    AwaitRefresh,
    AwaitCurvature,
    AwaitResidual,
    AwaitDirection,
    AwaitTrial,
    Done,
  };

  double elapsed() const {
    if (!cfg_->collect_timing) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start_)
        .count();
  }

  void expect(const std::vector<SimMessage>& inbox, int tag, bool with_orphans) {
    const int want = num_paths_ + (with_orphans ? static_cast<int>(orphans_.size()) : 0);
    if (static_cast<int>(inbox.size()) != want)
      throw ProtocolError("leader starved: expected " + std::to_string(want) +
                          " partials, got " + std::to_string(inbox.size()));
    for (const SimMessage& m : inbox)
      if (m.tag != tag)
        throw ProtocolError("leader: " + message_label(m) + " while awaiting " +
                            std::string(reduce_name(tag)));
  }

  void on_refresh(const std::vector<SimMessage>& inbox) {
    expect(inbox, kRRefresh, true);
    double f = 0.0, gmax = 0.0, g2 = 0.0;
    for (const SimMessage& m : inbox) {
      f += m.values[0];
      if (m.src.kind == ProcessorId::Kind::Path) {
        gmax = std::max(gmax, m.values[1]);
        g2 += m.values[2];
      }
    }
    f_ = f;
    ginf_ = gmax;
    g2_ = g2;

    const int row = static_cast<int>(report_->trace.size());
    report_->trace.push_back({row, f_, ginf_, dir_src_, cg_iters_flight_,
                              cg_term_, alpha_flight_, eng_->ops_total(),
                              eng_->ops_total() - prev_ops_, elapsed()});
    prev_ops_ = eng_->ops_total();

    const int completed = row;
    if (ginf_ <= cfg_->grad_tol) {
      finish(SolveStatus::Converged);
      return;
    }
    if (completed >= cfg_->max_outer) {
      finish(SolveStatus::MaxIters);
      return;
    }
    start_iteration(completed + 1);
  }

  void start_iteration(int outer) {
    eng_->set_phase(outer);
    dir_src_ = "-";
    cg_term_ = "-";
    cg_iters_flight_ = 0;
    alpha_flight_ = 0.0;
    switch (cfg_->method) {
      case Method::NewtonCG: {
        cg_tol_ = cfg_->cg.rel_residual_tol;
        if (cfg_->forcing == ForcingRule::SqrtGradient) {
          const double gn = std::sqrt(g2_);
          cg_tol_ = std::max(cfg_->cg.rel_residual_tol,
                             std::min(0.5, std::sqrt(gn)));
        }
        max_m_ = cfg_->cg.max_iters > 0 ? cfg_->cg.max_iters : num_paths_;
        k_ = 0;
        broadcast(kBCgFirst, {}, false);
        state_ = State::AwaitCurvature;
        break;
      }
      case Method::SteepestDescent:
        dir_src_ = "gradient";
        broadcast(kBDirection, {1.0}, false);
        state_ = State::AwaitDirection;
        break;
      case Method::DiagScaledGradient:
        dir_src_ = "scaled-gradient";
        broadcast(kBDirection, {2.0}, false);
        state_ = State::AwaitDirection;
        break;
    }
  }

  void on_curvature(const std::vector<SimMessage>& inbox) {
    expect(inbox, kRCurvature, false);
    double kappa = 0.0, pp = 0.0, rho0 = 0.0;
    for (const SimMessage& m : inbox) {
      kappa += m.values[0];
      pp += m.values[1];
      rho0 += m.values[2];
    }
    if (k_ == 0) {
      if (!std::isfinite(rho0))
        throw NumericalBreakdown(
            "conjugate gradient produced a non-finite initial residual norm", 0);
      rho_ = rho0;
      resid0_ = std::sqrt(rho_);
    }
    if (!std::isfinite(kappa))
      throw NumericalBreakdown("conjugate gradient produced a non-finite curvature p'Hp",
                               k_);
    if (negligible_curvature(kappa, pp, cfg_->cg.curvature_tol)) {
      cg_term_ = "escape";
      dir_src_ = "cg-escape";
      cg_iters_flight_ = k_;
      broadcast(kBCgFinish, {k_ == 0 ? 3.0 : 2.0, cfg_->cg.escape_step}, false);
      state_ = State::AwaitDirection;
      return;
    }
    const double alpha = rho_ / kappa;
    if (!std::isfinite(alpha))
      throw NumericalBreakdown("conjugate gradient produced a non-finite step length",
                               k_);
    broadcast(kBCgAlpha, {alpha}, false);
    state_ = State::AwaitResidual;
  }

  void on_residual(const std::vector<SimMessage>& inbox) {
    expect(inbox, kRResidual, false);
    double rho_new = 0.0;
    for (const SimMessage& m : inbox) rho_new += m.values[0];
    if (!std::isfinite(rho_new))
      throw NumericalBreakdown("conjugate gradient produced a non-finite residual norm",
                               k_);
    ++eng_->stats.cg_iterations;
    const int iters_done = k_ + 1;
    const double resid = std::sqrt(rho_new);
    if (resid <= cg_tol_ * resid0_) {
      cg_term_ = "converged";
      dir_src_ = "cg";
      cg_iters_flight_ = iters_done;
      broadcast(kBCgFinish, {0.0, 0.0}, false);
      state_ = State::AwaitDirection;
      return;
    }
    if (iters_done >= max_m_) {
      cg_term_ = "budget";
      dir_src_ = "cg";
      cg_iters_flight_ = iters_done;
      broadcast(kBCgFinish, {1.0, 0.0}, false);
      state_ = State::AwaitDirection;
      return;
    }
    const double beta = rho_new / rho_;
    rho_ = rho_new;
    ++k_;
    broadcast(kBCgStep, {beta}, false);
    state_ = State::AwaitCurvature;
  }

  void on_direction(const std::vector<SimMessage>& inbox) {
    expect(inbox, kRDirection, false);
    slope_ = 0.0;
    double boundary = kInf;
    for (const SimMessage& m : inbox) {
      slope_ += m.values[0];
      boundary = std::min(boundary, m.values[1]);
    }
    boundary = std::max(boundary, 0.0);
    const double step_cap =
        boundary == kInf ? kInf : cfg_->feasibility_fraction * boundary;

    if (cfg_->stepsize.kind == StepsizeRule::Kind::Constant) {
      alpha_flight_ = std::min(cfg_->stepsize.constant, step_cap);
      broadcast(kBCommit, {alpha_flight_}, true);
      state_ = State::AwaitRefresh;
      return;
    }
    f0_ = f_;
    trials_ = 0;
    trial_alpha_ = std::min(cfg_->stepsize.armijo.initial, step_cap);
    broadcast(kBTrial, {trial_alpha_}, true);
    state_ = State::AwaitTrial;
  }

  void on_trial(const std::vector<SimMessage>& inbox) {
    expect(inbox, kRTrial, true);
    double f_trial = 0.0;
    for (const SimMessage& m : inbox) f_trial += m.values[0];
    if (f_trial <= f0_ + cfg_->stepsize.armijo.sigma * trial_alpha_ * slope_) {
      alpha_flight_ = trial_alpha_;
      broadcast(kBCommit, {trial_alpha_}, true);
      state_ = State::AwaitRefresh;
      return;
    }
    ++trials_;
    if (trials_ > cfg_->stepsize.armijo.max_backtracks) {
      finish(SolveStatus::LineSearchFailure);
      return;
    }
    trial_alpha_ *= cfg_->stepsize.armijo.backtrack;
    broadcast(kBTrial, {trial_alpha_}, true);
  }

  void finish(SolveStatus status) {
    report_->status = status;
    report_->objective_value = f_;
    report_->grad_inf_norm = ginf_;
    report_->total_cg_iters = eng_->stats.cg_iterations;
    broadcast(kBDone, {static_cast<double>(static_cast<int>(status))}, true);
    eng_->mark_finished();
    state_ = State::Done;
  }

  void broadcast(int cmd, std::vector<double> values, bool include_orphans) {
    for (int p = 0; p < num_paths_; ++p)
      eng_->send({eng_->round() + 1, ProcessorId::leader(), ProcessorId::path(p),
                  SimMessage::Kind::Broadcast, cmd, values});
    if (include_orphans)
      for (const ProcessorId& a : orphans_)
        eng_->send({eng_->round() + 1, ProcessorId::leader(), a,
                    SimMessage::Kind::Broadcast, cmd, values});
  }

  Engine* eng_;
  const NewtonConfig* cfg_;
  int num_paths_;
  std::vector<ProcessorId> orphans_;
  NewtonReport* report_;
  std::chrono::steady_clock::time_point t_start_;

  State state_ = State::AwaitRefresh;
  double f_ = 0.0, ginf_ = 0.0, g2_ = 0.0;
  std::int64_t prev_ops_ = 0;

  // The outer iteration in flight, reported with its refresh row.
  std::string dir_src_ = "-";
  std::string cg_term_ = "-";
  int cg_iters_flight_ = 0;
  double alpha_flight_ = 0.0;

  // Conjugate-gradient bookkeeping.
  int k_ = 0, max_m_ = 0;
  double rho_ = 0.0, resid0_ = 0.0, cg_tol_ = 0.0;

  // Line-search bookkeeping.
  double slope_ = 0.0, f0_ = 0.0, trial_alpha_ = 0.0;
  int trials_ = 0;
};

std::vector<int> arc_member_paths(const CouplingBlock& block, int arc) {
  std::set<int> members;
  for (const CouplingEntry& e : block.entries)
    if (e.arc == arc) members.insert(e.path);
  return {members.begin(), members.end()};
}

} // namespace

std::uint64_t SpanningTree::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  for (const auto& [child, par] : parent) {
    mix(static_cast<std::uint64_t>(child.kind));
    mix(static_cast<std::uint64_t>(child.block));
    mix(static_cast<std::uint64_t>(child.index));
    mix(static_cast<std::uint64_t>(par.kind));
    mix(static_cast<std::uint64_t>(par.block));
    mix(static_cast<std::uint64_t>(par.index));
  }
  return h;
}

SpanningTree build_topology(const NetworkInstance& instance, std::uint64_t seed) {
  SpanningTree tree;
  const ProcessorId leader = ProcessorId::leader();
  tree.parent[leader] = leader;
  tree.children[leader] = {};
  for (int p = 0; p < instance.num_paths; ++p) {
    tree.parent[ProcessorId::path(p)] = leader;
    tree.children[leader].push_back(ProcessorId::path(p));
    tree.children[ProcessorId::path(p)] = {};
  }
  for (int bi = 0; bi < static_cast<int>(instance.blocks.size()); ++bi) {
    const CouplingBlock& block = instance.blocks[bi];
    for (int a = 0; a < block.num_arcs(); ++a) {
      const ProcessorId arc = ProcessorId::arc(bi, a);
      const std::vector<int> members = arc_member_paths(block, a);
      ProcessorId par = leader;
      if (!members.empty()) {
        std::size_t pick = 0;
        if (seed != 0) {
          const std::uint64_t key =
              splitmix64(seed ^ splitmix64((static_cast<std::uint64_t>(bi) << 32) |
                                           static_cast<std::uint32_t>(a)));
          pick = static_cast<std::size_t>(key % members.size());
        }
        par = ProcessorId::path(members[pick]);
      }
      tree.parent[arc] = par;
      tree.children[par].push_back(arc);
      tree.children[arc] = {};
    }
  }
  for (auto& [id, kids] : tree.children) std::sort(kids.begin(), kids.end());
  return tree;
}

SumOrder tree_sum_order(const NetworkInstance& instance, const SpanningTree& tree) {
  SumOrder order;
  for (int p = 0; p < instance.num_paths; ++p) {
    SumGroup group;
    group.path = p;
    auto it = tree.children.find(ProcessorId::path(p));
    if (it != tree.children.end())
      for (const ProcessorId& a : it->second)
        group.arcs.emplace_back(a.block, a.index);
    order.push_back(std::move(group));
  }
  auto it = tree.children.find(ProcessorId::leader());
  if (it != tree.children.end())
    for (const ProcessorId& c : it->second)
      if (c.kind == ProcessorId::Kind::Arc)
        order.push_back({-1, {{c.block, c.index}}});
  return order;
}

DistributedRun run_distributed_newton(const NetworkInstance& instance,
                                      const std::vector<double>& x0,
                                      const NewtonConfig& config,
                                      const SpanningTree& tree,
                                      std::string* message_log) {
  if (static_cast<int>(x0.size()) != instance.num_paths)
    throw ContractViolation("run_distributed_newton: x0 size does not match num_paths");

  Engine eng(message_log);
  DistributedRun run;

  // Per-path incidence and per-arc membership, in the fixed ascending
  // orders every fold relies on.
  std::vector<std::vector<ArcRef>> path_arcs(instance.num_paths);
  std::map<ProcessorId, ArcProc> arcs;
  std::vector<ProcessorId> orphans;
  for (int bi = 0; bi < static_cast<int>(instance.blocks.size()); ++bi) {
    const CouplingBlock& block = instance.blocks[bi];
    for (int a = 0; a < block.num_arcs(); ++a) {
      const ProcessorId id = ProcessorId::arc(bi, a);
      auto pit = tree.parent.find(id);
      if (pit == tree.parent.end())
        throw ContractViolation("run_distributed_newton: tree does not cover " +
                                id.str());
      std::vector<ProcessorId> members;
      for (int p : arc_member_paths(block, a)) members.push_back(ProcessorId::path(p));
      if (members.empty()) orphans.push_back(id);
      arcs.emplace(id, ArcProc(&eng, &instance, bi, a, members, pit->second));
    }
    for (const CouplingEntry& e : block.entries)
      path_arcs[e.path].push_back(
          {bi, e.arc, e.weight, ProcessorId::arc(bi, e.arc)});
  }

  std::vector<PathProc> paths;
  paths.reserve(instance.num_paths);
  for (int p = 0; p < instance.num_paths; ++p) {
    std::vector<ArcRef>& refs = path_arcs[p];
    std::sort(refs.begin(), refs.end(), [](const ArcRef& a, const ArcRef& b) {
      return std::tie(a.block, a.arc) < std::tie(b.block, b.arc);
    });
    int child_count = 0;
    auto it = tree.children.find(ProcessorId::path(p));
    if (it == tree.children.end())
      throw ContractViolation("run_distributed_newton: tree does not cover path " +
                              std::to_string(p));
    child_count = static_cast<int>(it->second.size());
    paths.emplace_back(&eng, &instance, &config, p, x0[p], refs, child_count);
  }

  LeaderProc leader(&eng, &config, instance.num_paths, orphans, &run.report);
  leader.begin();
  eng.run([&](const ProcessorId& dst, const std::vector<SimMessage>& inbox) {
    switch (dst.kind) {
      case ProcessorId::Kind::Leader: leader.handle(inbox); break;
      case ProcessorId::Kind::Path: paths[dst.index].handle(inbox); break;
      case ProcessorId::Kind::Arc: arcs.at(dst).handle(inbox); break;
    }
  });

  if (!eng.finished())
    throw ProtocolError("deadlock after round " + std::to_string(eng.round()) +
                        ": leader still awaiting " + leader.awaiting());

  run.report.x.resize(instance.num_paths);
  for (int p = 0; p < instance.num_paths; ++p) run.report.x[p] = paths[p].x();
  run.report.ops = eng.op_counter();
  run.stats = eng.stats;
  return run;
}

} // namespace pathnewton
