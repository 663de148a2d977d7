#include "flexstep/machine.hpp"

#include <string>

namespace flexstep
{
    std::string_view to_string(OpKind k) noexcept
    {
        switch (k)
        {
        case OpKind::Alu: return "alu";
        case OpKind::Load: return "load";
        case OpKind::Store: return "store";
        case OpKind::Branch: return "branch";
        case OpKind::PrivSwitch: return "priv";
        case OpKind::Amo: return "amo";
        }
        return "?";
    }

    std::uint64_t RegCheckpoint::word(int i) const
    {
        if (i == 0) return pc;
        if (i == 1) return npc;
        return regs.at(static_cast<std::size_t>(i - 2));
    }

    void RegCheckpoint::set_word(int i, std::uint64_t v)
    {
        if (i == 0)
            pc = v;
        else if (i == 1)
            npc = v;
        else
            regs.at(static_cast<std::size_t>(i - 2)) = v;
    }

    std::uint64_t alu_eval(AluOp op, std::uint64_t a, std::uint64_t b, std::int64_t imm) noexcept
    {
        const auto ui = static_cast<std::uint64_t>(imm);
        switch (op)
        {
        case AluOp::Add: return a + b + ui;
        case AluOp::Sub: return a - b;
        case AluOp::Xor: return a ^ b ^ ui;
        case AluOp::Mul: return a * (b | 1);
        case AluOp::Shl: return (a << (ui & 63)) | (a >> ((64 - (ui & 63)) & 63));
        case AluOp::LoadImm: return ui;
        }
        return 0;
    }

    std::vector<std::uint64_t> initial_memory(std::size_t mem_words)
    {
        std::vector<std::uint64_t> mem(mem_words);
        std::uint64_t s = 0x5EEDF00DULL;
        for (auto& w : mem) w = splitmix64(s);
        return mem;
    }

    Machine::Machine(std::span<const Instruction> program, std::size_t mem_words)
        : program_(program), mem_(initial_memory(mem_words))
    {
    }

    std::uint64_t Machine::address(const Instruction& ins) const
    {
        const std::uint64_t a = state_.regs[ins.rs1] + static_cast<std::uint64_t>(ins.imm);
        if (a >= mem_.size())
            throw MachineFault("memory access out of range at pc " + std::to_string(state_.npc) + ": address " +
                               std::to_string(a));
        return a;
    }

    StepInfo Machine::step()
    {
        const auto at = state_.npc;
        const Instruction& ins = program_[at];
        StepInfo info;
        info.kind = ins.kind;
        auto& r = state_.regs;
        std::uint64_t next = at + 1;
        switch (ins.kind)
        {
        case OpKind::Alu:
            if (ins.rd != 0) r[ins.rd] = alu_eval(ins.alu, r[ins.rs1], r[ins.rs2], ins.imm);
            break;
        case OpKind::Load: {
            const auto a = address(ins);
            info.accesses[0] = {AccessKind::Load, a, mem_[a]};
            info.access_count = 1;
            if (ins.rd != 0) r[ins.rd] = mem_[a];
            break;
        }
        case OpKind::Store: {
            const auto a = address(ins);
            mem_[a] = r[ins.rs2];
            info.accesses[0] = {AccessKind::Store, a, r[ins.rs2]};
            info.access_count = 1;
            break;
        }
        case OpKind::Branch:
            if (r[ins.rs1] < r[ins.rs2]) next = at + 1 + static_cast<std::uint64_t>(ins.imm);
            break;
        case OpKind::PrivSwitch: break;
        case OpKind::Amo: {
            const auto a = address(ins);
            const std::uint64_t old = mem_[a];
            const std::uint64_t updated = old + r[ins.rs2];
            mem_[a] = updated;
            info.accesses[0] = {AccessKind::AmoLoad, a, old};
            info.accesses[1] = {AccessKind::AmoStore, a, updated};
            info.access_count = 2;
            if (ins.rd != 0) r[ins.rd] = old;
            break;
        }
        }
        state_.pc = at;
        state_.npc = next;
        return info;
    }

    std::vector<Instruction> random_program(Rng& rng, std::size_t length, const ProgramMix& mix)
    {
        std::vector<Instruction> prog;
        prog.reserve(length);
        const double total = mix.alu + mix.load + mix.store + mix.branch + mix.amo + mix.priv;
        auto reg = [&] { return static_cast<std::uint8_t>(1 + rng.below(kRegCount - 1)); };
        auto src = [&] { return static_cast<std::uint8_t>(rng.below(kRegCount)); };
        auto addr = [&] { return static_cast<std::int64_t>(rng.below(mix.mem_words)); };
        for (std::size_t i = 0; i < length; ++i)
        {
            Instruction ins;
            double x = rng.uniform_open() * total;
            if ((x -= mix.alu) < 0)
            {
                ins.kind = OpKind::Alu;
                ins.alu = static_cast<AluOp>(rng.below(6));
                ins.rd = reg();
                ins.rs1 = src();
                ins.rs2 = src();
                ins.imm = static_cast<std::int64_t>(rng.next() >> 1);
                if (ins.alu == AluOp::Shl) ins.imm &= 63;
            }
            else if ((x -= mix.load) < 0)
            {
                // Base register r0 keeps addresses in range.
                ins.kind = OpKind::Load;
                ins.rd = reg();
                ins.imm = addr();
            }
            else if ((x -= mix.store) < 0)
            {
                ins.kind = OpKind::Store;
                ins.rs2 = src();
                ins.imm = addr();
            }
            else if ((x -= mix.branch) < 0)
            {
                ins.kind = OpKind::Branch;
                ins.rs1 = src();
                ins.rs2 = src();
                ins.imm = static_cast<std::int64_t>(rng.below(8));
            }
            else if ((x -= mix.amo) < 0)
            {
                ins.kind = OpKind::Amo;
                ins.rd = reg();
                ins.rs2 = src();
                ins.imm = addr();
            }
            else
                ins.kind = OpKind::PrivSwitch;
            prog.push_back(ins);
        }
        return prog;
    }
} // namespace flexstep
