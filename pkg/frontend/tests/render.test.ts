// Unit tests for the pure rendering layer, run against a detached
// happy-dom document — no service required.

import { Window } from 'happy-dom';
import { beforeEach, describe, expect, it } from 'vitest';

import {
  colorForClass,
  renderComparison,
  renderLegend,
  renderRoute,
  stateSummary,
} from '../src/render.js';
import type { InstanceDict, IntentionDict, RouteDict } from '../src/types.js';

let doc: Document;

beforeEach(() => {
  doc = new Window().document as unknown as Document;
});

const instance: InstanceDict = {
  version: 1,
  kind: 'tsptw',
  nodes: [
    { coords: [0.5, 0.5], time_window: [0, 10] },
    { coords: [0.2, 0.8], time_window: [0, 10] },
    { coords: [0.8, 0.3], time_window: [0, 10] },
  ],
};

const route: RouteDict = {
  order: [0, 1, 2, 0],
  states: [
    { route_length: 0, travel_time: 0 },
    { route_length: 0.42, travel_time: 0.42 },
    { route_length: 1.2, travel_time: 1.3 },
    { route_length: 1.65, travel_time: 1.75 },
  ],
  violations: [],
  skipped: [],
};

const intentions: IntentionDict[] = [
  { class_id: 0, class_name: 'route_length' },
  { class_id: 1, class_name: 'time_window' },
  { class_id: 0, class_name: 'route_length' },
];

describe('legend', () => {
  it('has exactly one entry per class', () => {
    const legend = renderLegend(doc, ['route_length', 'time_window']);
    const entries = legend.querySelectorAll('.legend-entry');
    expect(entries.length).toBe(2);
    expect(entries[0].textContent).toContain('route_length');
    expect(entries[1].textContent).toContain('time_window');
  });

  it('three-class plans get three entries', () => {
    const legend = renderLegend(doc, ['route_length', 'time_window', 'prize']);
    expect(legend.querySelectorAll('.legend-entry').length).toBe(3);
  });

  it('colors are a deterministic function of class id', () => {
    expect(colorForClass(1)).toBe(colorForClass(1));
    expect(colorForClass(0)).not.toBe(colorForClass(1));
    const a = renderLegend(doc, ['a', 'b']);
    const b = renderLegend(doc, ['a', 'b']);
    expect(a.innerHTML).toBe(b.innerHTML);
  });
});

describe('route drawing', () => {
  it('renders one colored edge per route step', () => {
    const view = renderRoute(doc, instance, route, intentions, 'actual');
    const lines = view.querySelectorAll('line');
    expect(lines.length).toBe(3);
    lines.forEach((line, i) => {
      expect(line.getAttribute('stroke')).toBe(colorForClass(intentions[i].class_id));
    });
  });

  it('distinguishes the depot from other nodes', () => {
    const view = renderRoute(doc, instance, route, intentions, 'actual');
    expect(view.querySelectorAll('[data-depot]').length).toBe(1);
    expect(view.querySelector('[data-depot]')?.getAttribute('data-node')).toBe('0');
    expect(view.querySelectorAll('circle.node').length).toBe(2);
  });

  it('edge t tooltip shows the state on arrival at its head', () => {
    const view = renderRoute(doc, instance, route, intentions, 'actual');
    const tip = view.querySelector('line[data-step="2"] title');
    expect(tip?.textContent).toContain(stateSummary(route.states[2]));
    expect(tip?.textContent).toContain('time_window');
  });
});

describe('comparison table', () => {
  it('renders one row per comparison key with a signed delta', () => {
    const table = renderComparison(doc, {
      short_term_objective: 0.25,
      long_term_objective: -0.1,
      feasibility_ratio: 0,
    });
    const rows = table.querySelectorAll('tbody tr');
    expect(rows.length).toBe(3);
    expect(rows[0].getAttribute('data-key')).toBe('short_term_objective');
    expect(rows[0].textContent).toContain('+0.2500');
    expect(rows[1].textContent).toContain('-0.1000');
  });
});
