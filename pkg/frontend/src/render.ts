// ── Pure DOM builders ────────────────────────────────────────────────
// Every function takes the Document explicitly so rendering is testable
// without global state. Instances live on a unit-square canvas; node
// coords are scaled into a fixed-size SVG.

import type {
  BundleDict,
  GlobalStateDict,
  InstanceDict,
  IntentionDict,
  RouteDict,
} from './types.js';

// Stable class → color mapping: index by class_id, never by insertion
// order, so colors survive reloads and route replacements.
const PALETTE = ['#2563eb', '#dc2626', '#059669', '#d97706', '#7c3aed', '#0891b2'];

export function colorForClass(classId: number): string {
  return PALETTE[classId % PALETTE.length];
}

const SVG_NS = 'http://www.w3.org/2000/svg';
const CANVAS = 320;
const MARGIN = 18;

function toPixel([x, y]: [number, number]): [number, number] {
  // unit square, y flipped so larger y renders higher
  return [MARGIN + x * (CANVAS - 2 * MARGIN), CANVAS - MARGIN - y * (CANVAS - 2 * MARGIN)];
}

/** One-line readout of a global state, used for edge hover tooltips. */
export function stateSummary(state: GlobalStateDict): string {
  const parts = [`length ${state.route_length.toFixed(3)}`];
  if (state.travel_time !== undefined) parts.push(`time ${state.travel_time.toFixed(3)}`);
  if (state.accumulated_prize !== undefined) parts.push(`prize ${state.accumulated_prize.toFixed(3)}`);
  if (state.accumulated_penalty_avoided !== undefined)
    parts.push(`penalty avoided ${state.accumulated_penalty_avoided.toFixed(3)}`);
  if (state.remaining_capacity !== undefined)
    parts.push(`capacity ${state.remaining_capacity.toFixed(3)}`);
  return parts.join(', ');
}

/** Legend with exactly one entry per intention class, in class_id order. */
export function renderLegend(doc: Document, classNames: string[]): HTMLElement {
  const box = doc.createElement('div');
  box.className = 'legend';
  classNames.forEach((name, classId) => {
    const item = doc.createElement('span');
    item.className = 'legend-entry';
    item.dataset.classId = String(classId);
    const swatch = doc.createElement('span');
    swatch.className = 'swatch';
    swatch.style.background = colorForClass(classId);
    item.append(swatch, doc.createTextNode(name));
    box.append(item);
  });
  return box;
}

/**
 * Route drawing: nodes as circles (the depot as a square), edges colored
 * by their intention class. Edge t (1-based) carries a tooltip with the
 * state upon arrival at its head — the consequence of taking it.
 */
export function renderRoute(
  doc: Document,
  instance: InstanceDict,
  route: RouteDict,
  intentions: IntentionDict[],
  title: string,
): HTMLElement {
  const wrap = doc.createElement('figure');
  wrap.className = 'route-view';
  const caption = doc.createElement('figcaption');
  caption.textContent = title;
  wrap.append(caption);

  const svg = doc.createElementNS(SVG_NS, 'svg');
  svg.setAttribute('viewBox', `0 0 ${CANVAS} ${CANVAS}`);
  svg.setAttribute('class', 'route-canvas');

  for (let t = 1; t < route.order.length; t++) {
    const [ax, ay] = toPixel(instance.nodes[route.order[t - 1]].coords);
    const [bx, by] = toPixel(instance.nodes[route.order[t]].coords);
    const line = doc.createElementNS(SVG_NS, 'line');
    line.setAttribute('x1', String(ax));
    line.setAttribute('y1', String(ay));
    line.setAttribute('x2', String(bx));
    line.setAttribute('y2', String(by));
    const intention = intentions[t - 1];
    line.setAttribute('stroke', colorForClass(intention.class_id));
    line.setAttribute('stroke-width', '2.5');
    line.setAttribute('data-step', String(t));
    line.setAttribute('data-class-id', String(intention.class_id));
    const tip = doc.createElementNS(SVG_NS, 'title');
    tip.textContent =
      `step ${t} [${intention.class_name}] — on arrival: ${stateSummary(route.states[t])}`;
    line.append(tip);
    svg.append(line);
  }

  instance.nodes.forEach((node, i) => {
    const [cx, cy] = toPixel(node.coords);
    let shape;
    if (i === 0) {
      // depot drawn as a square so it reads differently from stops
      shape = doc.createElementNS(SVG_NS, 'rect');
      shape.setAttribute('x', String(cx - 6));
      shape.setAttribute('y', String(cy - 6));
      shape.setAttribute('width', '12');
      shape.setAttribute('height', '12');
      shape.setAttribute('data-depot', 'true');
    } else {
      shape = doc.createElementNS(SVG_NS, 'circle');
      shape.setAttribute('cx', String(cx));
      shape.setAttribute('cy', String(cy));
      shape.setAttribute('r', '5');
    }
    shape.setAttribute('class', 'node');
    shape.setAttribute('data-node', String(i));
    const tip = doc.createElementNS(SVG_NS, 'title');
    tip.textContent = node.label ?? `node ${i}`;
    shape.append(tip);
    svg.append(shape);

    const text = doc.createElementNS(SVG_NS, 'text');
    text.setAttribute('x', String(cx + 7));
    text.setAttribute('y', String(cy - 7));
    text.setAttribute('class', 'node-label');
    text.textContent = node.label ?? String(i);
    svg.append(text);
  });

  wrap.append(svg);
  return wrap;
}

/** Comparison table: one row per key, values are CF minus actual. */
export function renderComparison(
  doc: Document,
  comparison: Record<string, number>,
): HTMLTableElement {
  const table = doc.createElement('table');
  table.className = 'comparison';
  const thead = doc.createElement('thead');
  const head = doc.createElement('tr');
  for (const label of ['representative value', 'cf − actual']) {
    const th = doc.createElement('th');
    th.textContent = label;
    head.append(th);
  }
  thead.append(head);
  const body = doc.createElement('tbody');
  for (const [key, delta] of Object.entries(comparison)) {
    const row = doc.createElement('tr');
    row.dataset.key = key;
    const name = doc.createElement('td');
    name.textContent = key;
    const value = doc.createElement('td');
    value.textContent = (delta >= 0 ? '+' : '') + delta.toFixed(4);
    row.append(name, value);
    body.append(row);
  }
  table.append(thead, body);
  return table;
}

/** Side-by-side actual vs counterfactual view for one explanation. */
export function renderBundle(
  doc: Document,
  instance: InstanceDict,
  bundle: BundleDict,
): HTMLElement {
  const box = doc.createElement('section');
  box.className = 'bundle';

  const q = bundle.question;
  const heading = doc.createElement('p');
  heading.className = 'bundle-question';
  heading.textContent =
    `why ${q.actual_edge[0]} → ${q.actual_edge[1]} at step ${q.t_ex}, ` +
    `not ${q.cf_edge[0]} → ${q.cf_edge[1]}?`;
  box.append(heading);

  const pair = doc.createElement('div');
  pair.className = 'route-pair';
  pair.append(
    renderRoute(doc, instance, bundle.actual_route, bundle.actual_intentions, 'actual'),
    renderRoute(doc, instance, bundle.cf_route, bundle.cf_intentions, 'counterfactual'),
  );
  box.append(pair);

  box.append(renderComparison(doc, bundle.comparison));

  const text = doc.createElement('p');
  text.className = 'bundle-text';
  text.textContent = bundle.text;
  box.append(text);
  return box;
}
