import { ApiError } from "./api.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

// Inline error banner carrying the server's error code; views must route
// every failed request through this instead of swallowing it.
export function errorBanner(err: unknown): HTMLElement {
  const box = el("div", "error-banner");
  if (err instanceof ApiError) {
    const code = el("span", "error-code", err.code);
    box.appendChild(code);
    box.appendChild(document.createTextNode(` ${err.message}`));
  } else {
    box.textContent = String(err);
  }
  return box;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}
