// Browser bootstrap: ?api= overrides the service origin, ?session= loads
// a session immediately.

import { ApiClient } from './api.js';
import { App } from './app.js';

const params = new URLSearchParams(window.location.search);
const api = new ApiClient(params.get('api') ?? window.location.origin);
const app = new App(document.getElementById('app') as HTMLElement, api, document);

const sessionId = params.get('session');
if (sessionId) void app.load(sessionId);

const input = document.getElementById('session-id') as HTMLInputElement;
const loadBtn = document.getElementById('load-session') as HTMLButtonElement;
loadBtn.addEventListener('click', () => void app.load(input.value.trim()));
