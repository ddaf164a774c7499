import { ServiceClient } from './api';
import { mountApp } from './app';

// Same-origin by default (vite dev server proxies /datasets etc. to the
// service); override with VITE_SERVICE_URL for a remote service.
const baseUrl = import.meta.env.VITE_SERVICE_URL ?? '';

mountApp(document.getElementById('app') as HTMLElement, new ServiceClient(baseUrl));
