#!/usr/bin/env python3
"""端到端复现 - 依次运行六个内置算例并打印结果汇总"""

import sys

sys.path.insert(0, ".")

from core.config import PRESETS, preset_spec
from core.logger import setup_logging
from core.runner import run_many


def _describe(costs: dict[str, float]) -> str:
    return (
        f"a={costs['a']:.4g} k1={costs['k1']:.4g} k2={costs['k2']:.4g} "
        f"Jf={costs['Jf']:.4g} J={costs['J']:.6g}"
    )


def main() -> int:
    setup_logging({"level": "INFO"})
    print("=" * 60)
    print("协同设计算例复现")
    print("=" * 60)

    specs = [preset_spec(name, calibrate_target=276.6) for name in sorted(PRESETS)]
    reports = run_many(specs, jobs=2)

    failed = 0
    for report in reports:
        summary = report.summary()
        initial, optimal = summary["initial"], summary["optimal"]
        ok = summary["corollary2_ok"]
        failed += not ok
        print(f"\n[{report.spec.name}] N={summary['N']} status={summary['status']}")
        print(f"   起点: {_describe(initial)}")
        print(f"   最优: {_describe(optimal)}")
        print(f"   {'✅' if ok else '❌'} 时域稳定性验证 -> {report.output_path}")

    print("\n" + "=" * 60)
    print(f"完成: {len(reports) - failed}/{len(reports)} 个算例通过稳定性验证")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
