#include "flexstep/isa.hpp"

#include "flexstep/model.hpp"

#include <algorithm>
#include <string>

namespace flexstep
{
    Platform::Platform(int core_count)
    {
        if (core_count < 1) throw InvalidArgument("Platform: need at least one core");
        cores_.resize(static_cast<std::size_t>(core_count));
    }

    CoreState& Platform::mut(int id)
    {
        if (id < 0 || id >= core_count()) throw InvalidArgument("Platform: no core " + std::to_string(id));
        return cores_[static_cast<std::size_t>(id)];
    }

    const CoreState& Platform::core(int id) const
    {
        if (id < 0 || id >= core_count()) throw InvalidArgument("Platform: no core " + std::to_string(id));
        return cores_[static_cast<std::size_t>(id)];
    }

    CoreState& Platform::require(int id, CoreAttr attr, const char* op)
    {
        CoreState& c = mut(id);
        if (c.attr != attr)
            throw IllegalInstruction(std::string(op) + " issued on core " + std::to_string(id) + ", which is not a " +
                                     (attr == CoreAttr::Main ? "main" : "checker") + " core");
        return c;
    }

    CoreAttr Platform::ids_contain(int core) const { return this->core(core).attr; }

    void Platform::configure(const std::set<int>& mains, const std::set<int>& checkers)
    {
        for (int id : mains)
        {
            core(id);
            if (checkers.count(id)) throw InvalidArgument("G.Configure: core " + std::to_string(id) + " in both sets");
        }
        for (int id : checkers) core(id);
        for (int id = 0; id < core_count(); ++id)
        {
            CoreState& c = mut(id);
            const CoreAttr attr = mains.count(id) ? CoreAttr::Main
                                  : checkers.count(id) ? CoreAttr::Checker
                                                       : CoreAttr::Compute;
            if (attr == c.attr) continue;
            // A role change drops the old bindings.
            c = CoreState{};
            c.attr = attr;
            c.checking = attr == CoreAttr::Checker ? Checking::Idle : Checking::Disabled;
        }
    }

    void Platform::associate(int main, const std::vector<int>& checkers)
    {
        CoreState& m = require(main, CoreAttr::Main, "M.associate");
        if (checkers.empty() || checkers.size() > 2)
            throw InvalidArgument("M.associate: one or two checker cores required");
        for (int c : checkers)
            if (core(c).attr != CoreAttr::Checker)
                throw IllegalInstruction("M.associate: core " + std::to_string(c) + " is not a checker core");
        // Release previous checkers of this main.
        for (int old : m.associated)
        {
            auto& a = mut(old).associated;
            a.erase(std::remove(a.begin(), a.end(), main), a.end());
        }
        m.associated = checkers;
        for (int c : checkers)
        {
            auto& a = mut(c).associated;
            if (std::find(a.begin(), a.end(), main) == a.end()) a.push_back(main);
        }
    }

    void Platform::check(int main, bool enable)
    {
        CoreState& m = require(main, CoreAttr::Main, "M.check");
        if (enable && m.associated.empty()) throw IllegalInstruction("M.check.enable: no associated checker core");
        m.checking = enable ? Checking::Enabled : Checking::Disabled;
    }

    void Platform::check_state(int checker, bool busy)
    {
        CoreState& c = require(checker, CoreAttr::Checker, "C.check_state");
        if (busy && c.associated.size() != 1)
            throw IllegalInstruction("C.check_state(busy): checker " + std::to_string(checker) + " has " +
                                     std::to_string(c.associated.size()) + " feeding mains, need exactly one");
        c.checking = busy ? Checking::Busy : Checking::Idle;
    }

    void Platform::record(int checker, const RegCheckpoint& context)
    {
        require(checker, CoreAttr::Checker, "C.record").ass_saved = context;
    }

    void Platform::apply(int checker, const RegCheckpoint& scp)
    {
        require(checker, CoreAttr::Checker, "C.apply").applied = scp;
    }

    std::uint64_t Platform::jal(int checker)
    {
        const CoreState& c = require(checker, CoreAttr::Checker, "C.jal");
        if (!c.applied) throw IllegalInstruction("C.jal: no SCP applied");
        return c.applied->npc;
    }

    bool Platform::result(int checker) const
    {
        const CoreState& c = core(checker);
        if (c.attr != CoreAttr::Checker)
            throw IllegalInstruction("C.result issued on core " + std::to_string(checker) + ", which is not a checker core");
        return c.last_verdict.value_or(true);
    }

    void Platform::report_verdict(int checker, bool pass)
    {
        require(checker, CoreAttr::Checker, "C.result").last_verdict = pass;
    }

    IsaResult isa_step(Platform& p, const IsaOp& op)
    {
        struct Visitor
        {
            Platform& p;
            IsaResult operator()(const isa::IdsContain& o) const { return p.ids_contain(o.core); }
            IsaResult operator()(const isa::Configure& o) const
            {
                p.configure(o.mains, o.checkers);
                return std::monostate{};
            }
            IsaResult operator()(const isa::Associate& o) const
            {
                p.associate(o.main, o.checkers);
                return std::monostate{};
            }
            IsaResult operator()(const isa::Check& o) const
            {
                p.check(o.main, o.enable);
                return std::monostate{};
            }
            IsaResult operator()(const isa::CheckState& o) const
            {
                p.check_state(o.checker, o.busy);
                return std::monostate{};
            }
            IsaResult operator()(const isa::Record& o) const
            {
                p.record(o.checker, o.context);
                return std::monostate{};
            }
            IsaResult operator()(const isa::Apply& o) const
            {
                p.apply(o.checker, o.scp);
                return std::monostate{};
            }
            IsaResult operator()(const isa::Jal& o) const { return p.jal(o.checker); }
            IsaResult operator()(const isa::Result& o) const { return p.result(o.checker); }
        };
        return std::visit(Visitor{p}, op);
    }
} // namespace flexstep
